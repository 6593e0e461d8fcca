#!/usr/bin/env python
from setuptools import setup, find_packages

VERSION = "0.1.0"

setup(name='pinsim',
      packages=find_packages(),
      version=VERSION,
      description='Numerical experiments on disordered pinning and directed polymer '
                  'models in the critical window',
      python_requires=">=3.8",
      install_requires=["numpy", "scipy>=1.6", "astropy>=4.0", "h5py>=3.0", "tqdm",
                        "more_itertools", "pydantic>=2.0"],
      extras_require={"test": ["pytest"]},
      entry_points={"console_scripts": ["pinsim = pinsim.cli:main"]},
      include_package_data=True,
      classifiers=[
          'Intended Audience :: Science/Research',
          'Operating System :: OS Independent',
          'Programming Language :: Python :: 3',
          'Topic :: Scientific/Engineering :: Mathematics',
          'Topic :: Scientific/Engineering :: Physics',
      ],
      )
