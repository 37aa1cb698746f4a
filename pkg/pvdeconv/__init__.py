#!/usr/bin/python
# -*- coding: utf8 -*-

import os

__title__     = "pvdeconv"
__author__    = "pvdeconv developers"
__email__     = ""
__description__ = """Point-voxel deconvolution autoencoder for 3D point clouds."""
__long_description__ = """
Encodes point clouds with point-voxel convolutions and decodes them with
point-voxel deconvolutions, trained with the Chamfer distance.
Ships its own small autodiff engine, mesh readers, surface sampling and
virtual-scan corruption, so that scan-to-CAD reconstruction can be studied on a desk.
"""
__url__       = ''
__copyright__ = "Copyright (C) 2026"
__version__   = "0.3.0"
__status__    = "3 - Alpha"
__credits__   = [""]
__license__   = """This is free software, and you are welcome to
redistribute it under certain conditions.
See the GNU General Public Licence for details."""

MODULE_DIR = os.path.dirname(__file__)

readers_dirs = os.path.join(MODULE_DIR, "readers")
