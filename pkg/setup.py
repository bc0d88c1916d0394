# This is the build script for setuptools.
# See: https://packaging.python.org/en/latest/tutorials/packaging-projects/

from setuptools import setup

if __name__ == "__main__":
    setup()
