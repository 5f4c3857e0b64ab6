"""Two data sets with equal energy, one with a steep right flank; constant alpha.

Norms of the difference of the two solutions as functions of t.
"""

import numpy as np


def norms(t, eps, alpha):
    """The nine difference norms, keyed by quantity."""
    s = np.sqrt(2 * eps)
    if t < 2:
        return {"y_sup": 2 * eps * t, "U_sup": 2 * eps, "y_xi_l2": s * t, "U_xi_l2": s,
                "V_xi_l2": 0.0, "g_l2": s * (t + alpha / 2), "g2_l2": 0.0, "g3_l2": 0.0,
                "UH_l2": 0.0}
    d = t - 2
    return {"y_sup": eps * (2 * t + alpha * d * d / 8),
            "U_sup": 2 * eps + alpha * eps * d / 4,
            "y_xi_l2": s * (t + alpha * d * d / 8),
            "U_xi_l2": s * (1 + alpha * d / 4),
            "V_xi_l2": s * alpha / 2,
            "g_l2": s * (alpha / 2 + t + alpha * d * d / 8),
            "g2_l2": 0.0, "g3_l2": 0.0, "UH_l2": 0.0}


def dtilde(t, eps, alpha):
    """Sum of the metric terms (V_xi is not part of the metric)."""
    n = norms(t, eps, alpha)
    return (n["y_sup"] + n["U_sup"] + n["UH_l2"] + n["y_xi_l2"] + n["U_xi_l2"]
            + n["g_l2"] + n["g2_l2"] + n["g3_l2"])


def energy_bound(eps):
    return 1 + eps
