"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``INVDIFF_PURE=1`` to force the numpy path.
"""

from __future__ import annotations

import os

if os.environ.get("INVDIFF_PURE"):
    from ._purekernels import BACKEND, gaussian_density, linear_relation, order_relation
else:
    try:
        from ._kernels import BACKEND, gaussian_density, linear_relation, order_relation
    except ImportError:  # extension not built
        from ._purekernels import BACKEND, gaussian_density, linear_relation, order_relation

__all__ = ["BACKEND", "gaussian_density", "linear_relation", "order_relation"]
