"""Test the package version."""

import re

import pytest

try:
    from src.nts.ddae import __version__ as version
    from src.nts.ddae.harness import main
except ModuleNotFoundError:
    from nts.ddae import __version__ as version
    from nts.ddae.harness import main


def test_version_numbering() -> None:
    """Three non-negative integers, not all zero, without padding: `0.1.0` or `2.0.0`."""
    assert isinstance(version, str)
    assert re.fullmatch(r"\d+\.\d+\.\d+", version)
    assert sum(int(part) for part in version.split(".")) > 0


def test_cli_reports_version(capsys) -> None:
    """`ddae --version` prints the package version."""
    with pytest.raises(SystemExit):
        main(["--version"])
    assert capsys.readouterr().out.strip() == f"ddae {version}"


if __name__ == "__main__":
    pytest.main()
