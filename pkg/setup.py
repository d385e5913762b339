# -*- coding: utf-8 -*-

from setuptools import setup

with open("VERSION") as handle:
    for line in handle.readlines():
        line = line.strip()
        if len(line) > 0:
            version = line
            break

with open("README.rst", "r") as f:
    long_descr = f.read()

setup(name="aoicut",
      version=version,
      description="Age of information optimal cutoff and waiting policies for status updates, with a Monte Carlo oracle.",
      long_description=long_descr,
      license="MIT",
      packages=["aoicut"],
      python_requires=">=3.8",
      keywords=["aoicut", "age of information", "preemption", "renewal", "dinkelbach", "monte carlo"],
      install_requires=[
          "numpy",
          "scipy"
      ],
      extras_require={
          "test": ["pytest"],
          "docs": ["sphinx", "sphinx-rtd-theme"],
      },
      entry_points={
          "console_scripts": ["aoicut=aoicut.cli:main"],
      },
      classifiers=[
          "Development Status :: 4 - Beta",
          "Intended Audience :: Science/Research",
          "Topic :: Scientific/Engineering :: Mathematics",
          "Programming Language :: Python",
          "Programming Language :: Python :: 3.8",
          "Programming Language :: Python :: 3.9",
          "Programming Language :: Python :: 3.10",
          "Programming Language :: Python :: 3.11",
      ],
      zip_safe=False)
