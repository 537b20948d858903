import pathlib

import pytest


@pytest.fixture
def write_corpus(tmp_path):
    """Write one-document-per-line corpus text and return its path."""

    def _write(lines, name="corpus.tsv"):
        path = tmp_path / name
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        return path

    return _write


@pytest.fixture(scope="session")
def fixture_root(tmp_path_factory) -> pathlib.Path:
    """Session-scoped home for the synthetic end-to-end fixture."""
    return tmp_path_factory.mktemp("fixture")
