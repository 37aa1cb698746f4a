#!/usr/bin/python
# -*- coding: utf8 -*-
"""
Plain-text key-value configuration files.

Grammar, one entry per line::

    # comment
    key = value

``value`` is an integer or a float (read with L{utils.atoi}), a word,
a comma-separated list (``256, 128`` or ``0.25, 0.5``) or a comma-separated list of
``channels:blocks:resolution`` triplets (``64:1:32, 64:2:16``).
Blank lines and lines starting with ``#`` are ignored.
"""
import io
import logging
from collections import OrderedDict
from gettext import gettext as _

from .utils import ConfigurationError, atoi, empty


logger = logging.getLogger(__name__)


INT, FLOAT, WORD, INTS, FLOATS, TRIPLETS = ('int', 'float', 'word', 'ints', 'floats', 'triplets')


def parse_value(kind, text):
    text = text.strip()
    if kind == INT:
        value = atoi(text)
        if not isinstance(value, int):
            raise ValueError(text)
        return value
    if kind == FLOAT:
        return float(text)
    if kind == WORD:
        return text
    if kind == INTS:
        if empty(text):
            return ()
        return tuple(parse_value(INT, t) for t in text.split(','))
    if kind == FLOATS:
        if empty(text):
            return ()
        return tuple(float(t) for t in text.split(','))
    if kind == TRIPLETS:
        triplets = []
        for item in text.split(','):
            parts = item.strip().split(':')
            if len(parts) != 3:
                raise ValueError(item)
            triplets.append(tuple(parse_value(INT, p) for p in parts))
        return tuple(triplets)
    raise ValueError(kind)


def format_value(kind, value):
    if kind == INTS:
        return ", ".join("%d" % v for v in value)
    if kind == FLOATS:
        return ", ".join(repr(float(v)) for v in value)
    if kind == TRIPLETS:
        return ", ".join("%d:%d:%d" % tuple(t) for t in value)
    if kind == FLOAT:
        return repr(float(value))
    return "%s" % value


class Field(object):

    def __init__(self, name, default, kind, doc=''):
        self.name = name
        self.default = default
        self.kind = kind
        self.doc = doc


class KeyValueConfig(object):
    """
    Ordered set of typed fields, read from and written to the key-value grammar.
    Subclasses declare C{FIELDS} and C{PRESETS}.
    """
    FIELDS = ()
    PRESETS = {}

    def __init__(self, **kwargs):
        self._values = OrderedDict()
        for field in self.FIELDS:
            self._values[field.name] = field.default
        self.update(kwargs)

    @classmethod
    def preset(cls, name):
        """
        @type name : string
        @rtype: L{KeyValueConfig}
        """
        if name not in cls.PRESETS:
            raise ConfigurationError(_("Unknown preset '%s' (known: %s)") %
                                     (name, ", ".join(sorted(cls.PRESETS))))
        return cls(**cls.PRESETS[name])

    @classmethod
    def field(cls, name):
        for f in cls.FIELDS:
            if f.name == name:
                return f
        raise ConfigurationError(_("Unknown configuration key '%s'") % name)

    def __getattr__(self, name):
        values = self.__dict__.get('_values')
        if values is not None and name in values:
            return values[name]
        raise AttributeError(name)

    def __setattr__(self, name, value):
        if name != '_values' and name in self.__dict__.get('_values', {}):
            self._values[name] = value
        else:
            object.__setattr__(self, name, value)

    def __eq__(self, other):
        return type(self) is type(other) and self._values == other._values

    def __ne__(self, other):
        return not self == other

    def keys(self):
        return list(self._values.keys())

    def copy(self):
        return type(self)(**self._values)

    def update(self, entries):
        """
        Override values from a mapping. C{None} values are ignored, so that
        unset command-line flags do not hide file or preset values.
        @type entries : dict
        """
        for name, value in entries.items():
            if value is None:
                continue
            f = self.field(name)
            if isinstance(value, str) and f.kind != WORD:
                value = self._parse(f, value, None)
            self._values[name] = value
        return self

    def validate(self):
        """
        Overridden by subclasses; raises L{ConfigurationError}.
        """
        return self

    def _parse(self, f, text, lineno):
        try:
            return parse_value(f.kind, text)
        except ValueError:
            where = "" if lineno is None else _(" at line %d") % lineno
            raise ConfigurationError(_("Invalid value '%s' for '%s'%s") % (text.strip(), f.name, where))

    def loads(self, text):
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if empty(line) or line.startswith('#'):
                continue
            if '=' not in line:
                raise ConfigurationError(_("Expected 'key = value' at line %d") % lineno)
            key, value = line.split('=', 1)
            key = key.strip()
            try:
                f = self.field(key)
            except ConfigurationError:
                raise ConfigurationError(_("Unknown configuration key '%s' at line %d") % (key, lineno))
            self._values[key] = self._parse(f, value, lineno)
        return self

    def dumps(self):
        lines = ["# %s" % type(self).__name__]
        for f in self.FIELDS:
            lines.append("%s = %s" % (f.name, format_value(f.kind, self._values[f.name])))
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, filename, base=None):
        """
        Read ``filename`` over ``base`` (or the field defaults).
        @type filename : string
        """
        logger.info(_("Load configuration from file '%s'") % filename)
        with io.open(filename, encoding='utf-8') as fd:
            content = fd.read()
        config = base.copy() if base is not None else cls()
        return config.loads(content)

    def save(self, filename):
        logger.info(_("Save configuration to file '%s'") % filename)
        with io.open(filename, 'w', encoding='utf-8') as fd:
            fd.write(self.dumps())

    def __repr__(self):
        return "%s(%s)" % (type(self).__name__,
                           ", ".join("%s=%r" % kv for kv in self._values.items()))
