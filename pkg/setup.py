from setuptools import setup, find_packages
from os import path

import csflock

project_dir = path.abspath(path.dirname(__file__))
with open(path.join(project_dir, 'README.md')) as f:
    long_description = f.read()

install_requires = (
    'numpy',
    'scipy',
    'pandas',
)
tests_require = (
    'coverage',
    'nose',
    'pep8',
    'pinocchio',
    'pyflakes',
)

setup(
    name=csflock.__name__,
    keywords=csflock.__keywords__,
    version=csflock.__version__,
    description='Cucker-Smale particles, reduced inertial field models and their comparison',
    long_description=long_description,
    packages=find_packages(),
    license='GPLv2',
    install_requires=install_requires,
    setup_requires=tests_require,
    tests_require=tests_require,
    test_suite='nose.collector',
    entry_points={
        'console_scripts': ['csflock=csflock.cli:main'],
    },
)
