"""Shared operator documents used across the suite."""

import pytest


def laplacian_doc(n):
    """-Delta = sum_i D_i^2 (D_i = -i d/dx_i), so unit coefficients."""
    terms = []
    for i in range(n):
        alpha = [0] * n
        alpha[i] = 2
        terms.append({"alpha": alpha, "radial_exponent": 0.0,
                      "poly": {" ".join(["0"] * n): [1.0, 0.0]}})
    return {"n": n, "k": 1, "mu": [2], "nu": [0],
            "entries": [{"i": 0, "j": 0, "terms": terms}]}


def dbar_doc():
    """D_1 + i D_2 on R^2 (Cauchy-Riemann type, order 1)."""
    return {"n": 2, "k": 1, "mu": [1], "nu": [0],
            "entries": [{"i": 0, "j": 0, "terms": [
                {"alpha": [1, 0], "radial_exponent": 0.0, "poly": {"0 0": [1.0, 0.0]}},
                {"alpha": [0, 1], "radial_exponent": 0.0, "poly": {"0 0": [0.0, 1.0]}},
            ]}]}


def cr_system_doc():
    """2x2 first-order elliptic system [[D1, D2], [-D2, D1]], mu=(1,1), nu=(0,0)."""
    def term(alpha, re):
        return {"alpha": alpha, "radial_exponent": 0.0, "poly": {"0 0": [re, 0.0]}}

    return {"n": 2, "k": 2, "mu": [1, 1], "nu": [0, 0],
            "entries": [
                {"i": 0, "j": 0, "terms": [term([1, 0], 1.0)]},
                {"i": 0, "j": 1, "terms": [term([0, 1], 1.0)]},
                {"i": 1, "j": 0, "terms": [term([0, 1], -1.0)]},
                {"i": 1, "j": 1, "terms": [term([1, 0], 1.0)]},
            ]}


def inverse_square_doc(c=0.25):
    """-Delta + c r^(-2) on R^3; the zeroth-order term is principal."""
    doc = laplacian_doc(3)
    doc["entries"][0]["terms"].append(
        {"alpha": [0, 0, 0], "radial_exponent": -2.0, "poly": {"0 0 0": [c, 0.0]}})
    return doc


def drift_doc(eps=0.5):
    """-Delta + eps (x_1/r) r^(-2) on R^3: couples harmonic degrees by 1."""
    doc = laplacian_doc(3)
    doc["entries"][0]["terms"].append(
        {"alpha": [0, 0, 0], "radial_exponent": -3.0, "poly": {"1 0 0": [eps, 0.0]}})
    return doc


def d1d2_doc():
    """Non-elliptic D_1 D_2 on R^2."""
    return {"n": 2, "k": 1, "mu": [2], "nu": [0],
            "entries": [{"i": 0, "j": 0, "terms": [
                {"alpha": [1, 1], "radial_exponent": 0.0, "poly": {"0 0": [1.0, 0.0]}},
            ]}]}


@pytest.fixture
def laplacian3d():
    from oppencil.operator_ast import parse_operator
    return parse_operator(laplacian_doc(3))


@pytest.fixture
def laplacian2d():
    from oppencil.operator_ast import parse_operator
    return parse_operator(laplacian_doc(2))


@pytest.fixture
def dbar2d():
    from oppencil.operator_ast import parse_operator
    return parse_operator(dbar_doc())


@pytest.fixture
def cr_system2d():
    from oppencil.operator_ast import parse_operator
    return parse_operator(cr_system_doc())


@pytest.fixture
def inverse_square3d():
    from oppencil.operator_ast import parse_operator
    return parse_operator(inverse_square_doc())
