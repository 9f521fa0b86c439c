import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dsmnv.field_core import (
    ComplexField,
    FieldFormatError,
    d_inv,
    d_z,
    dbar_inv,
    dbar_z,
    decode_field,
    encode_field,
    make_grid,
    read_field,
    weight,
    write_csv,
    write_field,
)

G = make_grid(8.0, 256)


def gauss(grid=G, s=1.0, c=0.0):
    return ComplexField.from_function(grid, lambda z: np.exp(-np.abs(z - c) ** 2 / s**2))


def rel(a, b):
    return np.linalg.norm(a.values - b.values) / np.linalg.norm(b.values)


def test_grid_basics():
    g = make_grid(1.0, 16)
    assert g.h == 0.125
    assert g.points[0, 0] == -1 - 1j
    assert g.points[0, 1] == -1 + 0.125 - 1j
    assert g.points[1, 0] == -1 - 1j + 0.125j
    assert make_grid(8, 256).h == 0.0625


@pytest.mark.parametrize("L,N", [(1.0, 15), (1.0, 14), (0.0, 16), (-1.0, 16)])
def test_grid_rejects(L, N):
    with pytest.raises(ValueError):
        make_grid(L, N)


def test_index_and_involution():
    g = make_grid(2.0, 16)
    j, i = g.index_of(0.5 - 0.25j)
    assert g.points[j, i] == 0.5 - 0.25j
    vals = g.points
    flipped = g.involution(vals)
    inner = np.s_[1:, 1:]
    assert np.allclose(flipped[inner], -vals[inner])


def test_weight_values():
    assert np.all(weight(0.0, G.points) == 1)
    assert np.isclose(weight(1.0, 1j), np.exp(-2j))
    for k in (0.3 + 2j, -4.1 + 0.7j):
        assert np.max(np.abs(np.abs(weight(k, G.points)) - 1)) < 1e-14


def test_derivative_of_gaussian():
    f = gauss()
    z = G.points
    exact = -np.conj(z) * np.exp(-np.abs(z) ** 2)
    assert np.max(np.abs(d_z(f).values - exact)) < 1e-8
    assert np.max(np.abs(dbar_z(f).values - np.conj(exact))) < 1e-8


def test_derivative_of_windowed_z():
    # a window of variance 4 leaves ~1e-6 at the box edge; wider windows break periodicity
    z = G.points
    w = np.exp(-np.abs(z) ** 2 / 4)
    f = ComplexField(G, z * w)
    exact = w + z * (-np.conj(z) * w / 4)
    assert np.max(np.abs(d_z(f).values - exact)) < 1e-4
    assert np.max(np.abs(dbar_z(f).values - z * (-z * w / 4))) < 1e-4


def test_constant_has_zero_derivative():
    c = ComplexField(G, np.full(G.shape, 2.5 - 1j))
    assert np.max(np.abs(d_z(c).values)) < 1e-12
    assert np.max(np.abs(dbar_z(c).values)) < 1e-12


def test_pure_mode_multiplier():
    g = make_grid(2.0, 32)
    xi = np.pi * 3 / g.L
    eta = np.pi * -5 / g.L
    x, y = g.points.real, g.points.imag
    mode = ComplexField(g, np.exp(1j * (xi * x + eta * y)))
    assert np.allclose(d_z(mode).values, 0.5 * (1j * xi + eta) * mode.values, atol=1e-12)
    assert np.allclose(dbar_z(mode).values, 0.5 * (1j * xi - eta) * mode.values, atol=1e-12)


def test_conjugation_rules():
    f = ComplexField.from_function(G, lambda z: (1 + 2j * z) * np.exp(-np.abs(z - 0.3) ** 2))
    assert np.max(np.abs(dbar_z(f.conj()).values - d_z(f).conj().values)) < 1e-12
    assert np.max(np.abs(dbar_inv(f).conj().values - d_inv(f.conj()).values)) < 1e-12


def test_cauchy_transforms_invert_derivatives():
    z = G.points
    g = ComplexField(G, -z * np.exp(-np.abs(z) ** 2))
    assert rel(dbar_inv(g), gauss()) < 1e-3
    assert rel(d_inv(g.conj()), gauss()) < 1e-3
    # the transforms must decay inside the box for the periodic derivative to apply
    h = ComplexField.from_function(G, lambda z: (1 + z) * np.exp(-np.abs(z + 0.4j) ** 2))
    f = dbar_z(h)
    assert rel(dbar_z(dbar_inv(f)), f) < 1e-3
    f = d_z(h)
    assert rel(d_z(d_inv(f)), f) < 1e-3


def test_local_correction_improves_accuracy():
    z = G.points
    g = ComplexField(G, -z * np.exp(-np.abs(z) ** 2))
    plain = rel(dbar_inv(g, local_correction=False), gauss())
    corrected = rel(dbar_inv(g), gauss())
    assert corrected < plain / 10


def test_cauchy_zero():
    zero = ComplexField.zeros(G)
    assert np.all(dbar_inv(zero).values == 0)


def test_field_arithmetic_and_immutability():
    f = gauss()
    with pytest.raises(ValueError):
        f.values[0, 0] = 1
    assert np.allclose((2 * f - f).values, f.values)
    assert np.allclose((np.ones(G.shape) * f).values, f.values)
    with pytest.raises(ValueError):
        f + gauss(make_grid(8.0, 128))
    with pytest.raises(ValueError):
        ComplexField(G, np.full(G.shape, np.nan))


@settings(max_examples=25, deadline=None)
@given(
    n=st.sampled_from([16, 18, 32]),
    L=st.floats(0.5, 20.0),
    seed=st.integers(0, 2**32 - 1),
)
def test_binary_roundtrip_is_bit_exact(n, L, seed):
    g = make_grid(L, n)
    r = np.random.default_rng(seed)
    f = ComplexField(g, r.standard_normal(g.shape) + 1j * r.standard_normal(g.shape))
    back = decode_field(encode_field(f))
    assert back.grid == g
    assert np.array_equal(back.values.view(np.uint64), f.values.view(np.uint64))


def test_file_roundtrip_and_errors(tmp_path):
    f = gauss(make_grid(2.0, 16))
    path = tmp_path / "f.mnvf"
    write_field(f, path)
    assert np.array_equal(read_field(path).values, f.values)
    data = path.read_bytes()
    assert data[:4] == b"MNVF" and len(data) == 16 + 16 * 16 * 16

    (tmp_path / "short.mnvf").write_bytes(data[:-8])
    with pytest.raises(FieldFormatError):
        read_field(tmp_path / "short.mnvf")
    (tmp_path / "magic.mnvf").write_bytes(b"XXXX" + data[4:])
    with pytest.raises(FieldFormatError):
        read_field(tmp_path / "magic.mnvf")
    bad = bytearray(data)
    bad[16:24] = np.array([np.inf]).tobytes()
    (tmp_path / "inf.mnvf").write_bytes(bytes(bad))
    with pytest.raises(FieldFormatError):
        read_field(tmp_path / "inf.mnvf")


def test_csv_export(tmp_path):
    g = make_grid(1.0, 16)
    f = ComplexField.from_function(g, lambda z: z)
    write_csv(f, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x,y,re,im"
    assert len(lines) == 1 + 256
    x, y, re, im = map(float, lines[2].split(","))
    assert (x, y, re, im) == (-0.875, -1.0, -0.875, -1.0)
