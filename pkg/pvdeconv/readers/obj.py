import io
from gettext import gettext as _

from pvdeconv.geometry import MeshReader, MeshParseError, TriangleMesh, fan_triangulate


class ObjReader(MeshReader):
    label       = _(u"Wavefront OBJ")
    extensions  = ('obj',)

    def read(self, path):
        vertices = []
        faces = []
        with io.open(path, encoding='utf-8', errors='replace') as fd:
            for lineno, line in enumerate(fd, 1):
                tokens = line.split()
                if not tokens or tokens[0].startswith('#'):
                    continue
                if tokens[0] == 'v':
                    if len(tokens) < 4:
                        raise MeshParseError(path, _("vertex needs 3 coordinates"), line=lineno)
                    try:
                        vertices.append([float(t) for t in tokens[1:4]])
                    except ValueError:
                        raise MeshParseError(path, _("invalid vertex coordinate"), line=lineno)
                elif tokens[0] == 'f':
                    polygon = [self._index(path, lineno, t, len(vertices)) for t in tokens[1:]]
                    if len(polygon) < 3:
                        raise MeshParseError(path, _("face needs at least 3 vertices"), line=lineno)
                    faces.extend(fan_triangulate(polygon))
        return TriangleMesh(vertices, faces)

    def _index(self, path, lineno, token, count):
        # "v", "v/vt", "v//vn" or "v/vt/vn"; negative indices count from the end
        try:
            index = int(token.split('/')[0])
        except ValueError:
            raise MeshParseError(path, _("invalid face index '%s'") % token, line=lineno)
        index = count + index if index < 0 else index - 1
        if not 0 <= index < count:
            raise MeshParseError(path, _("face index '%s' out of range") % token, line=lineno)
        return index
