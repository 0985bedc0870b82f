from importlib.metadata import PackageNotFoundError, version

packages = [
    "streamlit",
    "pandas",
    "numpy",
    "pytest",
    "hypothesis",
]

for pkg in packages:
    try:
        print(f"{pkg} == {version(pkg)}")
    except PackageNotFoundError:
        print(f"{pkg} not installed")
