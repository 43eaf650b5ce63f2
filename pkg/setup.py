from setuptools import setup, find_packages

setup(
    name = 'rbx',
    version='0.1.0',
    license='License.txt',
    packages = [
        'rbx',
        'rbx.mains',
    ],
    package_dir = {'':'.'},
    zip_safe = False,
    python_requires='>=3.8',
    install_requires=[
        'rdflib >= 6.0',
        'numpy >= 1.17',
        'scipy >= 1.4',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points = {'console_scripts': [
            'rbx=rbx.mains.rbx:main',
        ],
    },
)
