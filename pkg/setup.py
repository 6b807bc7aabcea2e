from setuptools import setup

from koebepoly.version import __version__

setup(
    name="koebepoly",
    version=__version__,
    description=("Covering, stability and distortion certificates for complex polynomials"),
    license="GPL-3.0",
    python_requires=">=3.10",
    install_requires=[
        "typing_extensions",
        "numpy",
    ],
    extras_require={
        "test": ["pytest", "hypothesis"],
    },
    packages=["koebepoly"],
    entry_points={
        "console_scripts": [
            "koebepoly = koebepoly.cli:main",
        ],
    },
)
