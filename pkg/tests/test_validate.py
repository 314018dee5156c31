import pytest

from spincavity import cli, validate


pytestmark = pytest.mark.slow


def test_builtin_checks_all_pass():
    results = validate.run_checks()
    failed = [r for r in results if not r.passed]
    assert not failed, [f"{r.name}: {r.detail}" for r in failed]
    assert {r.name for r in results} == {name for name, _ in validate.CHECKS}


def test_perturbed_dissipator_is_detected():
    """Deliberate fault injection: scaling the trajectory engine's jump rates
    by 1.1 must break ME-MCWF consistency."""
    results = validate.run_checks(dissipator_scale=1.1)
    by_name = {r.name: r for r in results}
    assert not by_name["me-vs-trajectories"].passed
    # the fault is confined to the stochastic engine; everything else passes
    others = [r for r in results if r.name != "me-vs-trajectories"]
    assert all(r.passed for r in others)


def test_cli_validate_exit_codes(capsys):
    assert cli.main(["validate"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == len(validate.CHECKS)
    assert cli.main(["validate", "--dissipator-scale", "1.1"]) == 3
