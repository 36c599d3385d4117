import os

import pytest

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def data_root() -> str:
    return os.environ.get("FISHERGCN_DATA", os.path.join(REPO_ROOT, "data"))


def container_path(name: str) -> str:
    return os.path.join(data_root(), name)


def require_container(name: str) -> str:
    """Path to a real-dataset container, or a skip when it is not present."""
    path = container_path(name)
    if not os.path.isfile(os.path.join(path, "meta.txt")):
        pytest.skip(
            f"container fixture {name!r} not present under {data_root()} "
            f"(set FISHERGCN_DATA or convert the dataset with the converter)"
        )
    return path
