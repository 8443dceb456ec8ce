import subprocess
from glob import glob

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup


def opencv_flags():
    cflags = subprocess.check_output(
        ["pkg-config", "--cflags", "opencv4"], text=True
    ).split()
    includes = [f[2:] for f in cflags if f.startswith("-I")]
    return includes, ["opencv_core", "opencv_imgcodecs"]


opencv_includes, opencv_libs = opencv_flags()

ext = Pybind11Extension(
    "_leishquant",
    sorted(glob("src/*.cpp")) + ["bindings/py_module.cpp"],
    include_dirs=["include", "vendor"] + opencv_includes,
    libraries=opencv_libs,
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
