"""
Matrix Factorization Tests
==========================
The 4x4 factorizations of x^m + y^n + z^2 and their negative controls.

Run:  pytest tests/test_mcm.py -v
"""

import pytest


class TestFactorization:

    @pytest.mark.parametrize("m,n,k,l", [(2, 2, 0, 0), (2, 2, 1, 1), (3, 2, 2, 0), (3, 3, 1, 2), (4, 3, 0, 1)])
    def test_unit_identities_hold(self, m, n, k, l):
        from mcm import build_factorization, verify_factorization
        report = verify_factorization(build_factorization(m, n, k, l))
        assert report.success, f"m={m} n={n} k={k} l={l}: {[c.witness for c in report.failures()]}"
        assert len(report.checks) == 3

    def test_unit_f_polynomial(self):
        from mcm import f_polynomial, mcm_context
        assert mcm_context().format(f_polynomial(3, 2)) == "x^3 + y^2 + z^2"

    def test_unit_phi_layout(self):
        from mcm import build_factorization
        pair = build_factorization(3, 3, 1, 2)
        assert pair.phi.to_text()[0] == ["x^2", "y", "0", "z"]
        assert pair.psi.to_text()[3] == ["z", "0", "-x^2", "-y"]
        assert pair.label == "m=3 n=3 k=1 l=2"

    @pytest.mark.parametrize("m,n,k,l", [(2, 2, 2, 1), (2, 2, 0, 2), (1, 2, 0, 0), (2, 2, -1, 0), (2, 2, 0.5, 0)])
    def test_unit_out_of_range(self, m, n, k, l):
        from mcm import build_factorization
        from errors import InputError
        with pytest.raises(InputError):
            build_factorization(m, n, k, l)

    def test_unit_perturbed_phi_fails_with_witness(self):
        from mcm import build_factorization, verify_factorization
        bad = build_factorization(2, 2, 1, 1).perturbed(0, 0)
        report = verify_factorization(bad)
        assert not report.success
        first = report.failures()[0]
        assert first.name == "phi*psi = f*I"
        assert first.witness.startswith("entry (1,1):"), f"Got {first.witness}"


class TestSweep:

    def test_unit_default_sweep(self):
        from mcm import factorization_sweep
        report = factorization_sweep()
        # (2,2): 4 pairs, (2,3): 6, (3,2): 6, (3,3): 9
        assert len(report.checks) == 25, f"Expected 25 pairs, got {len(report.checks)}"
        assert report.success

    def test_unit_custom_sweep(self):
        from mcm import factorization_sweep
        report = factorization_sweep(ms=(4,), ns=(2,))
        assert [c.name for c in report.checks][:2] == ["m=4 n=2 k=0 l=0", "m=4 n=2 k=0 l=1"]
