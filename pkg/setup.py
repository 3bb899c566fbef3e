import os
import re
from setuptools import setup, find_packages

current_path = os.path.abspath(os.path.dirname(__file__))


def read_file(*parts):
    with open(os.path.join(current_path, *parts), encoding='utf-8') as reader:
        return reader.read()


def get_requirements(*parts):
    with open(os.path.join(current_path, *parts), encoding='utf-8') as reader:
        return [line.strip() for line in reader.readlines() if line.strip()]


def find_version(*file_paths):
    version_file = read_file(*file_paths)
    version_matched = re.search(r"^__version__ = ['\"]([^'\"]*)['\"]",
                                version_file, re.M)
    if version_matched:
        return version_matched.group(1)
    raise RuntimeError('Unable to find version')


setup(
    name="sbtdcond",
    version=find_version('sbtdcond', '__init__.py'),
    packages=find_packages(exclude=['tests', 'examples']),
    license="MIT",
    author="sbtdcond contributors",
    description=("Condition numbers of structured block term decompositions "
                 "via Tucker compression"),
    long_description=read_file('README.md'),
    long_description_content_type="text/markdown",
    keywords=(
        "tensor-decomposition condition-number tucker hosvd "
        "block-term-decomposition cpd"
    ),
    install_requires=get_requirements('requirements.txt'),
    tests_require=["pytest>=4.0", "pytest-cov"],
    entry_points={'console_scripts': ['sbtdcond=sbtdcond.cli:main']},
    include_package_data=True,
    zip_safe=True,
    classifiers=[
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Operating System :: OS Independent",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Software Development :: Libraries :: Python Modules",
    ],
)
