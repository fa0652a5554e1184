#!/usr/bin/env python3
"""
The setup script for dyadnet.

"""
from setuptools import find_packages
from setuptools import setup


with open('README.rst') as f:
    readme = f.read()


setup(
    name='dyadnet',
    version='0.1.0',
    description='Jackknife bias corrected two-way fixed effect models for '
                'directed networks',
    long_description=readme,
    license='MIT',
    packages=find_packages(exclude=['docs', 'example']),
    install_requires=[
        'jsonschema >= 3.2',
        'numpy >= 1.22',
        'pandas >= 1.5',
        'pyyaml >= 5.4',
        'scipy >= 1.8'
    ],
    entry_points={
        'console_scripts': [
            'dyadnet = dyadnet.cli:main'
        ]
    },
    python_requires='>=3.8',
    zip_safe=True)
