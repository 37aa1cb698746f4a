#!/usr/bin/python
# -*- coding: utf8 -*-
"""
The "PVDC" container: named arrays in one little-endian binary file.

Layout::

    magic      4 bytes  b"PVDC"
    version    u32
    count      u32
    count x:
        name   u32 byte length + UTF-8 bytes
        dtype  u8 tag (see DTYPE_TAGS)
        rank   u32
        dims   rank x u32
        data   product(dims) little-endian scalars, row-major
"""
import io
import os
import struct
import logging
from collections import OrderedDict
from gettext import gettext as _

import numpy as np

from .utils import Error


logger = logging.getLogger(__name__)


MAGIC = b"PVDC"
VERSION = 1

DTYPE_TAGS = OrderedDict([
    (1, np.dtype('<f4')),
    (2, np.dtype('<f8')),
    (3, np.dtype('<i8')),
    (4, np.dtype('u1')),
])


class CheckpointError(Error):
    pass


def _tag(dtype):
    for tag, dt in DTYPE_TAGS.items():
        if np.dtype(dtype).newbyteorder('<') == dt:
            return tag
    raise CheckpointError(_("Unsupported dtype '%s' in checkpoint") % dtype)


def dumps(arrays):
    """
    @type arrays : ordered mapping of name -> numpy array
    @rtype: bytes
    """
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack('<II', VERSION, len(arrays)))
    for name, array in arrays.items():
        array = np.asarray(array)
        tag = _tag(array.dtype)
        encoded = name.encode('utf-8')
        out.write(struct.pack('<I', len(encoded)))
        out.write(encoded)
        out.write(struct.pack('<BI', tag, array.ndim))
        out.write(struct.pack('<%dI' % array.ndim, *array.shape))
        out.write(np.ascontiguousarray(array, dtype=DTYPE_TAGS[tag]).tobytes())
    return out.getvalue()


def loads(content):
    """
    @type content : bytes
    @rtype: OrderedDict of name -> numpy array
    """
    view = memoryview(content)
    pos = [0]

    def take(size):
        if pos[0] + size > len(view):
            raise CheckpointError(_("Truncated checkpoint at byte %d") % pos[0])
        chunk = view[pos[0]:pos[0] + size]
        pos[0] += size
        return chunk

    if bytes(take(4)) != MAGIC:
        raise CheckpointError(_("Not a checkpoint (bad magic)"))
    version, count = struct.unpack('<II', take(8))
    if version != VERSION:
        raise CheckpointError(_("Unsupported checkpoint version %d") % version)
    arrays = OrderedDict()
    for _i in range(count):
        length, = struct.unpack('<I', take(4))
        name = bytes(take(length)).decode('utf-8')
        tag, rank = struct.unpack('<BI', take(5))
        if tag not in DTYPE_TAGS:
            raise CheckpointError(_("Unknown dtype tag %d for '%s'") % (tag, name))
        dims = struct.unpack('<%dI' % rank, take(4 * rank))
        dtype = DTYPE_TAGS[tag]
        size = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
        array = np.frombuffer(bytes(take(size)), dtype=dtype).reshape(dims)
        arrays[name] = array.astype(dtype.newbyteorder('='))
    return arrays


def save(filename, arrays):
    """
    Write atomically: the file appears complete or not at all.
    """
    logger.info(_("Save checkpoint to file '%s'") % filename)
    tmp = filename + '.tmp'
    with open(tmp, 'wb') as fd:
        fd.write(dumps(arrays))
    os.replace(tmp, filename)


def load(filename):
    logger.info(_("Load checkpoint from file '%s'") % filename)
    with open(filename, 'rb') as fd:
        content = fd.read()
    return loads(content)


def encode_text(text):
    return np.frombuffer(text.encode('utf-8'), dtype=np.uint8).copy()


def decode_text(array):
    return np.asarray(array, dtype=np.uint8).tobytes().decode('utf-8')
