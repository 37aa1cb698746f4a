from gettext import gettext as _

import numpy as np

from pvdeconv.geometry import MeshReader, MeshParseError, TriangleMesh, fan_triangulate


PLY_TYPES = {
    'char': 'i1', 'int8': 'i1',
    'uchar': 'u1', 'uint8': 'u1',
    'short': '<i2', 'int16': '<i2',
    'ushort': '<u2', 'uint16': '<u2',
    'int': '<i4', 'int32': '<i4',
    'uint': '<u4', 'uint32': '<u4',
    'float': '<f4', 'float32': '<f4',
    'double': '<f8', 'float64': '<f8',
}


class Element(object):

    def __init__(self, name, count):
        self.name = name
        self.count = count
        #: list of (name, dtype) or (name, (count dtype, item dtype)) for lists
        self.properties = []

    def isList(self):
        return any(isinstance(t, tuple) for _n, t in self.properties)


class PlyReader(MeshReader):
    """
    PLY, ascii or binary little-endian. Reads the x, y, z vertex properties and
    the first list property of faces; other elements are skipped.
    """
    label       = _(u"Stanford PLY")
    extensions  = ('ply',)

    def read(self, path):
        with open(path, 'rb') as fd:
            content = fd.read()
        elements, fmt, body, lines = self._header(path, content)
        if fmt == 'ascii':
            return self._ascii(path, elements, content[body:], lines)
        if fmt == 'binary_little_endian':
            return self._binary(path, elements, content, body)
        raise MeshParseError(path, _("unsupported PLY format '%s'") % fmt, line=2)

    def _header(self, path, content):
        end = content.find(b"end_header")
        if not content.startswith(b"ply") or end < 0:
            raise MeshParseError(path, _("not a PLY file or header not terminated"), line=1)
        newline = content.find(b"\n", end)
        body = len(content) if newline < 0 else newline + 1
        header = content[:end].decode('ascii', 'replace').splitlines()
        elements = []
        fmt = None
        for lineno, line in enumerate(header, 1):
            tokens = line.split()
            if not tokens or tokens[0] in ('ply', 'comment', 'obj_info'):
                continue
            try:
                if tokens[0] == 'format':
                    fmt = tokens[1]
                elif tokens[0] == 'element':
                    elements.append(Element(tokens[1], int(tokens[2])))
                elif tokens[0] == 'property':
                    if tokens[1] == 'list':
                        kind = (PLY_TYPES[tokens[2]], PLY_TYPES[tokens[3]])
                        elements[-1].properties.append((tokens[4], kind))
                    else:
                        elements[-1].properties.append((tokens[2], PLY_TYPES[tokens[1]]))
            except (IndexError, KeyError, ValueError):
                raise MeshParseError(path, _("malformed header line '%s'") % line.strip(), line=lineno)
        return elements, fmt, body, len(header) + 1

    def _vertices(self, path, element, table):
        names = [n for n, _t in element.properties]
        try:
            columns = [names.index(axis) for axis in ('x', 'y', 'z')]
        except ValueError:
            raise MeshParseError(path, _("vertex element lacks x, y or z"))
        return np.asarray(table, dtype=np.float64)[:, columns] if element.count else np.zeros((0, 3))

    def _ascii(self, path, elements, body, header_lines):
        lines = body.decode('ascii', 'replace').splitlines()
        pos = 0
        vertices = np.zeros((0, 3))
        faces = []
        for element in elements:
            rows = []
            for _i in range(element.count):
                lineno = header_lines + 1 + pos
                if pos >= len(lines):
                    raise MeshParseError(path, _("truncated '%s' element") % element.name, line=lineno)
                try:
                    values = [float(t) for t in lines[pos].split()]
                except ValueError:
                    raise MeshParseError(path, _("invalid number"), line=lineno)
                pos += 1
                if element.isList():
                    count = int(values[0]) if values else 0
                    if count < 3 or len(values) < count + 1:
                        raise MeshParseError(path, _("malformed face"), line=lineno)
                    rows.append([int(v) for v in values[1:count + 1]])
                else:
                    if len(values) < len(element.properties):
                        raise MeshParseError(path, _("expected %d values") % len(element.properties), line=lineno)
                    rows.append(values[:len(element.properties)])
            if element.name == 'vertex':
                vertices = self._vertices(path, element, rows)
            elif element.name == 'face':
                for polygon in rows:
                    faces.extend(fan_triangulate(polygon))
        return self._mesh(path, vertices, faces)

    def _binary(self, path, elements, content, offset):
        vertices = np.zeros((0, 3))
        faces = []
        for element in elements:
            if not element.isList():
                dtype = np.dtype([(n, t) for n, t in element.properties])
                size = dtype.itemsize * element.count
                if offset + size > len(content):
                    raise MeshParseError(path, _("truncated '%s' element") % element.name, offset=len(content))
                table = np.frombuffer(content, dtype=dtype, count=element.count, offset=offset)
                offset += size
                if element.name == 'vertex':
                    rows = np.stack([table[n].astype(np.float64) for n, _t in element.properties], axis=1) \
                        if element.count else np.zeros((0, len(element.properties)))
                    vertices = self._vertices(path, element, rows)
                continue
            polygons, offset = self._binaryLists(path, element, content, offset)
            if element.name == 'face':
                for polygon in polygons:
                    faces.extend(fan_triangulate(polygon))
        return self._mesh(path, vertices, faces)

    def _binaryLists(self, path, element, content, offset):
        """
        Elements holding a list property, read record by record.
        """
        polygons = []
        for _i in range(element.count):
            polygon = None
            for _name, kind in element.properties:
                if isinstance(kind, tuple):
                    count_type, item_type = np.dtype(kind[0]), np.dtype(kind[1])
                    if offset + count_type.itemsize > len(content):
                        raise MeshParseError(path, _("truncated list"), offset=len(content))
                    count = int(np.frombuffer(content, count_type, 1, offset)[0])
                    offset += count_type.itemsize
                    if offset + count * item_type.itemsize > len(content):
                        raise MeshParseError(path, _("truncated list"), offset=len(content))
                    items = np.frombuffer(content, item_type, count, offset)
                    offset += count * item_type.itemsize
                    if polygon is None:
                        polygon = [int(v) for v in items]
                else:
                    offset += np.dtype(kind).itemsize
            if polygon is None or len(polygon) < 3:
                raise MeshParseError(path, _("malformed face"), offset=offset)
            polygons.append(polygon)
        return polygons, offset

    def _mesh(self, path, vertices, faces):
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise MeshParseError(path, _("face index out of range (%d vertices)") % len(vertices))
        return TriangleMesh(vertices, faces)
