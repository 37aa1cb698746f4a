#!/usr/bin/python
# -*- coding: utf8 -*-
"""
Unit tests, one module per package module. Run with::

    python -m unittest discover pvdeconv/tests

Set C{PVDECONV_SLOW=1} to include the long training runs.
"""
