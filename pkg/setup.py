#!/usr/bin/python
# -*- coding: utf8 -*-
from setuptools import setup, find_packages

import pvdeconv

setup(name         = pvdeconv.__title__,
      version      = pvdeconv.__version__,
      license      = pvdeconv.__license__,
      description  = pvdeconv.__description__,
      author       = pvdeconv.__author__,
      author_email = pvdeconv.__email__,
      url          = pvdeconv.__url__,
      long_description = pvdeconv.__long_description__,

      provides     = ['pvdeconv'],
      packages     = find_packages(exclude=['examples', 'examples.*']),
      scripts      = ["pvdeconv-run"],
      platforms    = ('any',),
      python_requires  = '>=3.6',
      install_requires = ['numpy>=1.17', 'scipy>=1.4', 'matplotlib>=3.1'],
      test_suite   = 'pvdeconv.tests',
      keywords     = ['point cloud', 'autoencoder', 'voxel', 'chamfer'],
      classifiers  = ['Programming Language :: Python :: 3',
                      'Operating System :: OS Independent',
                      'Intended Audience :: Science/Research',
                      'Natural Language :: English',
                      'Topic :: Scientific/Engineering',
                      'Development Status :: %s' % pvdeconv.__status__],
)
