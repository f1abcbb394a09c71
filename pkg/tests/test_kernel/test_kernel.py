"""Tests for the interaction kernels."""

import dataclasses
import math

import numpy as np
import pytest

from rggflock.errors import (
    DomainError,
    InvalidKernel,
    KernelFamilyNotSupportedException,
)
from rggflock.kernel import Kernel, resolve_family
from rggflock.kernels import KERNEL_FAMILIES, KernelFamily


def test_every_family_is_registered():
    """Test that each kernel family tag resolves to its details class."""
    for family in KernelFamily:
        assert family in KERNEL_FAMILIES
        assert resolve_family(str(family)).family is family


def test_family_flags():
    """Test that only the tabulated family reads samples and no unused flags."""
    for family, details in KERNEL_FAMILIES.items():
        assert details.uses_samples is (family is KernelFamily.TABULATED)
        assert not hasattr(details, "uses_gamma")


def test_unknown_family_is_rejected():
    """Test that an unknown family raises the unsupported-family error."""
    with pytest.raises(KernelFamilyNotSupportedException):
        resolve_family("gaussian")

    with pytest.raises(KernelFamilyNotSupportedException):
        Kernel(family="gaussian", radius=0.1, amplitude=1.0)


def test_indicator_values(indicator_kernel):
    """Test the indicator kernel inside, at and beyond the radius."""
    assert indicator_kernel.eval(0.0) == 0.5
    assert indicator_kernel.eval(0.0999) == 0.5
    assert indicator_kernel.eval(0.1) == 0.0
    assert indicator_kernel.eval(3.0) == 0.0


def test_triangular_values(triangular_kernel):
    """Test that the triangular kernel decays linearly to zero."""
    assert triangular_kernel.eval(0.05) == pytest.approx(0.25)
    assert triangular_kernel.eval(0.075) == pytest.approx(0.125)
    assert triangular_kernel.eval(0.1) == 0.0


def test_powercap_values():
    """Test the power-cap profile 1 - u^gamma."""
    kernel = Kernel(family=KernelFamily.POWER_CAP, radius=0.2, amplitude=2.0, gamma=2)

    assert kernel.eval(0.1) == pytest.approx(2.0 * 0.75)
    assert kernel.eval(0.2) == 0.0


def test_tabulated_values():
    """Test that tabulated kernels interpolate between normalized samples."""
    kernel = Kernel(
        family=KernelFamily.TABULATED,
        radius=0.4,
        amplitude=2.0,
        samples=(1.0, 0.5, 0.0),
    )

    assert kernel.eval(0.0) == pytest.approx(2.0)
    assert kernel.eval(0.1) == pytest.approx(1.5)
    assert kernel.eval(0.3) == pytest.approx(0.5)
    assert kernel.eval(0.4) == 0.0


def test_eval_vectorized(triangular_kernel):
    """Test that array input gives an array of the same shape."""
    values = triangular_kernel.eval(np.array([[0.0, 0.05], [0.1, 0.2]]))

    assert values.shape == (2, 2)
    np.testing.assert_allclose(values, [[0.5, 0.25], [0.0, 0.0]])


def test_eval_rejects_negative_and_nan(indicator_kernel):
    """Test that negative or NaN distances raise a domain error."""
    with pytest.raises(DomainError):
        indicator_kernel.eval(-1e-9)

    with pytest.raises(DomainError):
        indicator_kernel.eval(np.array([0.0, math.nan]))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"radius": 0.0, "amplitude": 1.0},
        {"radius": -0.1, "amplitude": 1.0},
        {"radius": 0.1, "amplitude": 0.0},
        {"radius": math.inf, "amplitude": 1.0},
        {"radius": 0.1, "amplitude": 1.0, "gamma": 0.0},
        {"radius": 0.1, "amplitude": 1.0, "shift": -0.5},
    ],
)
def test_invalid_parameters(kwargs):
    """Test that non-positive or non-finite parameters are rejected."""
    with pytest.raises(InvalidKernel):
        Kernel(family=KernelFamily.TRIANGULAR, **kwargs)


@pytest.mark.parametrize(
    "samples",
    [
        None,
        (1.0,),
        (1.0, 1.5, 0.0),
        (1.0, 0.5, 0.1),
        (1.0, 0.0, 0.0),
        (1.0, -0.5, 0.0),
    ],
)
def test_invalid_tabulated_samples(samples):
    """Test that malformed tabulated profiles are rejected."""
    with pytest.raises(InvalidKernel):
        Kernel(
            family=KernelFamily.TABULATED, radius=0.1, amplitude=1.0, samples=samples
        )


def test_samples_only_for_tabulated():
    """Test that samples are refused by the analytic families."""
    with pytest.raises(InvalidKernel) as excinfo:
        Kernel(
            family=KernelFamily.INDICATOR,
            radius=0.1,
            amplitude=1.0,
            samples=(1.0, 0.0),
        )

    assert excinfo.value.path == "samples"


def test_kernel_is_immutable(indicator_kernel):
    """Test that kernel instances cannot be modified."""
    with pytest.raises(dataclasses.FrozenInstanceError):
        indicator_kernel.radius = 0.2


def test_shifted_kernel(triangular_kernel):
    """Test that the shifted kernel keeps f(0) on [0, delta r] then follows f."""
    # Act
    shifted = triangular_kernel.shifted(0.5)

    # Assert
    assert shifted.support_end == pytest.approx(0.15)
    assert shifted.eval(0.0) == 0.5
    assert shifted.eval(0.05) == 0.5
    assert shifted.eval(0.1) == pytest.approx(0.25)
    assert shifted.eval(0.15) == pytest.approx(0.0, abs=1e-12)
    assert shifted.eval(0.16) == 0.0
    assert triangular_kernel.shift == 0.0


def test_shifted_dominates_unshifted(triangular_kernel):
    """Test that shifting never lowers the weight."""
    distances = np.linspace(0.0, 0.2, 41)
    shifted = triangular_kernel.shifted(0.2)

    assert np.all(shifted.eval(distances) >= triangular_kernel.eval(distances))


def test_shift_edge_cases(triangular_kernel):
    """Test zero shifts, repeated shifts and negative shifts."""
    assert triangular_kernel.shifted(0.0) is triangular_kernel

    with pytest.raises(DomainError):
        triangular_kernel.shifted(-0.1)

    with pytest.raises(DomainError):
        triangular_kernel.shifted(0.1).shifted(0.1)

    assert triangular_kernel.shifted(0.1).unshifted() == triangular_kernel


def test_plateau_end():
    """Test where each family stops being equal to f(0)."""
    indicator = Kernel(family=KernelFamily.INDICATOR, radius=0.2, amplitude=1.0)
    triangular = Kernel(family=KernelFamily.TRIANGULAR, radius=0.2, amplitude=1.0)
    tabulated = Kernel(
        family=KernelFamily.TABULATED,
        radius=0.2,
        amplitude=1.0,
        samples=(1.0, 1.0, 0.0),
    )

    assert indicator.plateau_end == pytest.approx(0.2)
    assert triangular.plateau_end == 0.0
    assert triangular.shifted(0.5).plateau_end == pytest.approx(0.1)
    assert tabulated.plateau_end == pytest.approx(0.1)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize(
    "family, gamma",
    [
        (KernelFamily.INDICATOR, 1.0),
        (KernelFamily.TRIANGULAR, 1.0),
        (KernelFamily.POWER_CAP, 0.5),
        (KernelFamily.POWER_CAP, 3.0),
    ],
)
def test_c0_matches_closed_form(family, gamma, d):
    """Test the c0 quadrature against the closed forms."""
    kernel = Kernel(family=family, radius=0.1, amplitude=0.7, gamma=gamma)

    expected = resolve_family(family).c0_closed_form(d, gamma)

    assert kernel.c0_integral(d) == pytest.approx(expected, rel=1e-9)


def test_c0_of_tabulated_kernel():
    """Test c0 of a tabulated triangle, which equals the triangular value."""
    kernel = Kernel(
        family=KernelFamily.TABULATED,
        radius=0.1,
        amplitude=1.0,
        samples=(1.0, 0.75, 0.5, 0.25, 0.0),
    )

    assert kernel.c0_integral(2) == pytest.approx(1.0 / 6.0, rel=1e-9)


def test_c0_domain(triangular_kernel):
    """Test that c0 needs the unshifted kernel and d >= 2."""
    with pytest.raises(DomainError):
        triangular_kernel.shifted(0.1).c0_integral(2)

    with pytest.raises(DomainError):
        triangular_kernel.c0_integral(1)


def test_breakpoints_include_shift():
    """Test that the plateau end of a shifted kernel is reported as a kink."""
    kernel = Kernel(
        family=KernelFamily.TABULATED,
        radius=1.0,
        amplitude=1.0,
        samples=(1.0, 0.5, 0.0),
    )

    assert kernel.breakpoints() == [0.5]
    assert kernel.shifted(0.25).breakpoints() == pytest.approx([0.25, 0.75])


def test_dict_round_trip():
    """Test that a kernel survives to_dict / from_dict."""
    kernel = Kernel(
        family=KernelFamily.TABULATED,
        radius=0.3,
        amplitude=1.5,
        shift=0.2,
        samples=(2.0, 1.0, 0.0),
    )

    assert Kernel.from_dict(kernel.to_dict()) == kernel
