from setuptools import setup, find_packages

setup(
    name="cranial-recon",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    py_modules=["cli", "orchestrator"],
    package_data={"": ["*.yaml"]},
    entry_points={"console_scripts": ["cranial-recon=cli:run"]},
)
