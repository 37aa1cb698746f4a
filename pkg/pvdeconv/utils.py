#!/usr/bin/python
# -*- coding: utf8 -*-
import os
import hashlib
import importlib
import struct


THREADS_ENV = 'PVDECONV_THREADS'


class Error(Exception):
    pass

class ConfigurationError(Error):
    pass

class ContractError(Error):
    pass


def empty(data):
    """
    @type data : can be a list, tuple, string, dict, numpy array
    @rtype: boolean
    """
    if data is None:
        return True
    if isinstance(data, (list, tuple, dict)):
        return len(data) == 0
    if hasattr(data, 'size'):
        return data.size == 0
    return '%s' % data == ''


def atoi(s):
    """
    Try convert specified string in integer or float,
    and return string otherwise
    """
    try:
        return int(s)
    except (TypeError, ValueError):
        try:
            return float(s)
        except (TypeError, ValueError):
            return s


def derive_seed(seed, *keys):
    """
    Split a master seed into an independent child seed.
    The child is the first 8 bytes of BLAKE2b("seed:key1:key2..."),
    so it depends only on the master seed and the keys, never on call order.
    @type seed : int
    @rtype: int (0 <= seed < 2**63)
    """
    token = ":".join(["%s" % seed] + ["%s" % k for k in keys])
    digest = hashlib.blake2b(token.encode('utf-8'), digest_size=8).digest()
    return struct.unpack('<Q', digest)[0] >> 1


def thread_count():
    """
    Worker count for file-parallel work, from the environment.
    """
    value = atoi(os.environ.get(THREADS_ENV, '1'))
    if not isinstance(value, int) or value < 1:
        return 1
    return value


def itersubclasses(cls, _seen=None):
    """
    itersubclasses(cls)

    Generator over all subclasses of a given class, in depth first order.
    http://code.activestate.com/recipes/576949/
    """
    if not isinstance(cls, type):
        raise TypeError('itersubclasses must be called with '
                        'new-style classes, not %.100r' % cls)
    if _seen is None:
        _seen = set()
    for sub in cls.__subclasses__():
        if sub not in _seen:
            _seen.add(sub)
            yield sub
            for sub in itersubclasses(sub, _seen):
                yield sub


def plugins_list(plugins_dirs):
    """
    Generator over all available plugins files basenames, present in all specified ``plugins_dirs``.
    """
    for path in plugins_dirs.split(os.pathsep):
        for filename in sorted(os.listdir(path)):
            name, ext = os.path.splitext(filename)
            if ext == ".py" and not name.startswith('_'):
                yield name


def import_plugins(plugins_dirs, package):
    """
    Imports all plugins available in ``plugins_dirs`` as submodules of ``package``.
    @rtype: dict of name -> module
    """
    modules = {}
    for p in plugins_list(plugins_dirs):
        modules[p] = importlib.import_module("%s.%s" % (package, p))
    return modules
