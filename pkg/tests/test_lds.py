import numpy as np
from pytest import approx

from ustat_lil.lds import HaltonN, SphereN, VdCorput, primes, vdc


def test_vdc():
    """assert that the vdcorput generator produces the correct values"""
    assert vdc(11, 2) == 0.8125
    assert vdc(0, 3) == 0.0


def test_vdcorput():
    vgen = VdCorput(2)
    vgen.reseed(0)
    assert [vgen.pop() for _ in range(3)] == [0.5, 0.25, 0.75]
    vgen.reseed(0)
    assert vgen.pop() == 0.5


def test_vdcorput_agrees_with_vdc():
    vgen = VdCorput(5)
    vgen.reseed(10)
    for k in range(11, 30):
        assert vgen.pop() == approx(vdc(k, 5))


def test_halton_n():
    """assert that the halton_n generator produces the correct values"""
    hgen = HaltonN([2, 3, 5])
    hgen.reseed(0)
    res = hgen.pop()
    assert res[0] == 0.5
    assert res[2] == 0.2
    res = hgen.pop()
    assert res[0] == 0.25
    assert res[2] == 0.4


def test_primes():
    assert primes(10) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_sphere_n_unit_and_reproducible():
    sgen = SphereN(7)
    sgen.reseed(3)
    first = [sgen.pop() for _ in range(20)]
    sgen.reseed(3)
    again = [sgen.pop() for _ in range(20)]
    for a, b in zip(first, again):
        assert np.linalg.norm(a) == approx(1.0)
        assert np.array_equal(a, b)


def test_sphere_n_one_dimension():
    sgen = SphereN(1)
    sgen.reseed(0)
    # the midpoint maps to the origin
    assert sgen.pop()[0] == 0.0
    assert sgen.pop()[0] == approx(-1.0)
