from setuptools import setup

PACKAGE = "polyfair"
DESCRIPTION = "Balanced fairness in polymatroid capacity sets: exact and \
poly-symmetric solvers, sandwich bounds and random cluster experiments."
AUTHOR = "polyfair developers"
AUTHOR_EMAIL = ""
URL = ""
# Must be a semantic version number. Also update polyfair/__init__.py
VERSION = "1.0.0"  # __import__(PACKAGE).__version__

setup(
    name=PACKAGE,
    version=VERSION,
    author=AUTHOR,
    author_email=AUTHOR_EMAIL,
    url=URL,
    description=DESCRIPTION,
    packages=['polyfair', 'polyfair.models',
              'polyfair.solvers', 'polyfair.tests'],
    package_data={'polyfair': ['scenarios/*.ini'], },
    scripts=['polyfair_cli'],
    license='BSD',
    long_description=open('README.rst', 'rt').read(),
    python_requires=">=3.8",
    install_requires=["numpy >= 1.17",
                      "scipy >= 1.4",
                      "lxml",
                      "matplotlib >= 3.3",
                      "semantic_version",
                      ],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: BSD License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: System :: Networking",
    ],
    zip_safe=False,
)
