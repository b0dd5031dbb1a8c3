"""
Complex arithmetic on (real, imaginary) tensor pairs.

The differentiable alphabet is real-valued; channels, precoders and receivers
are carried as two real tensors and combined with the kernels below.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .tensor import Tensor, add, as_tensor, matmul, moveaxis, mul, sub, sum_axis


@dataclass(frozen=True)
class ComplexPair:
    re: Tensor
    im: Tensor

    @classmethod
    def from_array(cls, z: Any, requires_grad: bool = False) -> "ComplexPair":
        arr = np.asarray(z, dtype=np.complex128)
        return cls(
            Tensor(arr.real, requires_grad=requires_grad),
            Tensor(arr.imag, requires_grad=requires_grad),
        )

    def to_array(self) -> np.ndarray:
        return self.re.data + 1j * self.im.data

    @property
    def shape(self):
        return self.re.shape

    def conj(self) -> "ComplexPair":
        return ComplexPair(self.re, mul(self.im, -1.0))

    def __add__(self, other: "ComplexPair") -> "ComplexPair":
        return ComplexPair(add(self.re, other.re), add(self.im, other.im))

    def __sub__(self, other: "ComplexPair") -> "ComplexPair":
        return ComplexPair(sub(self.re, other.re), sub(self.im, other.im))

    def __mul__(self, other: "ComplexPair") -> "ComplexPair":
        return cmul(self, other)

    def scale(self, factor: Any) -> "ComplexPair":
        """Multiply by a real tensor or scalar."""
        factor = as_tensor(factor)
        return ComplexPair(mul(self.re, factor), mul(self.im, factor))

    def abs2(self) -> Tensor:
        return add(mul(self.re, self.re), mul(self.im, self.im))

    def sum(self, axis=None, keepdims: bool = False) -> "ComplexPair":
        return ComplexPair(
            sum_axis(self.re, axis, keepdims=keepdims),
            sum_axis(self.im, axis, keepdims=keepdims),
        )


def cmul(a: ComplexPair, b: ComplexPair) -> ComplexPair:
    """Elementwise complex product."""
    re = sub(mul(a.re, b.re), mul(a.im, b.im))
    im = add(mul(a.re, b.im), mul(a.im, b.re))
    return ComplexPair(re, im)


def cmatmul(a: ComplexPair, b: ComplexPair) -> ComplexPair:
    """Complex matrix product over the last two axes."""
    re = sub(matmul(a.re, b.re), matmul(a.im, b.im))
    im = add(matmul(a.re, b.im), matmul(a.im, b.re))
    return ComplexPair(re, im)


def hermitian(a: ComplexPair) -> ComplexPair:
    """Conjugate transpose over the last two axes."""
    re = moveaxis(a.re, -1, -2)
    im = mul(moveaxis(a.im, -1, -2), -1.0)
    return ComplexPair(re, im)
