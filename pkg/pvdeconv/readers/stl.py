import os
import struct
from gettext import gettext as _

import numpy as np

from pvdeconv.geometry import MeshReader, MeshParseError, TriangleMesh


class StlReader(MeshReader):
    """
    Binary STL. Vertices shared between triangles are merged on exact equality.
    """
    label       = _(u"Binary STL")
    extensions  = ('stl',)

    RECORD = np.dtype([('normal', '<f4', (3,)), ('vertices', '<f4', (3, 3)), ('attribute', '<u2')])

    def read(self, path):
        size = os.path.getsize(path)
        with open(path, 'rb') as fd:
            header = fd.read(84)
            if len(header) < 84:
                raise MeshParseError(path, _("truncated header"), offset=len(header))
            count, = struct.unpack('<I', header[80:84])
            expected = 84 + count * self.RECORD.itemsize
            if size < expected:
                raise MeshParseError(path, _("truncated: %d triangles announced") % count, offset=size)
            records = np.frombuffer(fd.read(count * self.RECORD.itemsize), dtype=self.RECORD)
        corners = records['vertices'].reshape(-1, 3).astype(np.float64)
        vertices, inverse = np.unique(corners, axis=0, return_inverse=True)
        return TriangleMesh(vertices, inverse.reshape(-1, 3))
