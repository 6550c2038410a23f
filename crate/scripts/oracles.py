"""Reference values frozen into the Rust test suites.

Every number here is computed from the published formulas in materials.py,
independently of the library code paths. Wavelengths in um, lengths in um.
"""
import math

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from materials import (air, ktp_yT, ktp_zT, mgf2_e, mgf2_o, quartz_e,
                       quartz_o, yvo_e, yvo_o)

LP = 0.4054
LS = 0.784
KTP_L = 11480.0
YVO_L = 18500.0
KTP_ALPHA = 6.7e-6
YVO_ALPHA = 4.43e-6
POLING = 3.425
WP = (305.71, 380.56)


def idler(lp, ls):
    return 1.0 / (1.0 / lp - 1.0 / ls)


def qwp(lam):
    dn1 = mgf2_e(lam) - mgf2_o(lam)
    dn2 = quartz_e(lam) - quartz_o(lam)
    return 2 * math.pi * (dn1 * WP[0] - dn2 * WP[1]) / lam


def uncompensated(ls, li, t=25.0, length=KTP_L):
    eff = length * (1 + KTP_ALPHA * (t - 25.0))
    return 2 * math.pi * eff * (ktp_yT(li, t) / li + ktp_yT(ls, t) / ls) + 2 * (qwp(ls) + qwp(li))


def compensation(ls, li, t=25.0, length=YVO_L):
    eff = length * (1 + YVO_ALPHA * (t - 25.0))
    return 2 * math.pi * eff * (yvo_o(ls, t) / ls + yvo_o(li, t) / li
                                - yvo_e(ls, t) / ls - yvo_e(li, t) / li)


def mismatch(t, ls=LS, lp=LP, period=POLING):
    li = idler(lp, ls)
    return 2 * math.pi * (ktp_zT(lp, t) / lp - ktp_zT(ls, t) / ls - ktp_zT(li, t) / li - 1 / period)


def main():
    li = idler(LP, LS)
    print("idler_nm", repr(li * 1000))
    print("ktp_y_784_25C", repr(ktp_yT(0.784, 25.0)))
    print("air_minus_one_800", repr(air(0.8) - 1))
    print("yvo_o_minus_e_800", repr(yvo_o(0.8) - yvo_e(0.8)))
    print("qwp_850_over_quarter", repr(qwp(0.85) / (math.pi / 2)))
    print("qwp_405_rad", repr(qwp(0.4054)))
    print("uncompensated_rad", repr(uncompensated(LS, li)))
    print("compensation_rad", repr(compensation(LS, li)))

    t_star = brentq(mismatch, 0, 150, xtol=1e-13)
    print("phasematch_t_c", repr(t_star))

    def intensity(ls):
        x = mismatch(t_star, ls) * KTP_L / 2
        return 1.0 if x == 0 else (math.sin(x) / x) ** 2
    lo = brentq(lambda s: intensity(s) - 0.5, LS - 0.01, LS, xtol=1e-14)
    hi = brentq(lambda s: intensity(s) - 0.5, LS, LS + 0.01, xtol=1e-14)
    print("joint_fwhm_nm", repr((hi - lo) * 1000))

    def phase_t(t):
        return compensation(LS, li, t)
    dt_pi = brentq(lambda d: abs(phase_t(25.0 + d) - phase_t(25.0)) - math.pi, 0.1, 10, xtol=1e-12)
    print("yvo_dt_pi", repr(dt_pi))
    phi_max = 2 * math.acos(math.sqrt(0.995))
    h = 1e-3
    slope_y = (phase_t(25 + h) - phase_t(25 - h)) / (2 * h)
    print("yvo_tolerance_0995", repr(phi_max / abs(slope_y)))
    slope_k = (uncompensated(LS, li, t_star + h) - uncompensated(LS, li, t_star - h)) / (2 * h)
    print("ktp_tolerance_0995_at_tstar", repr(phi_max / abs(slope_k)))

    # uniform peak-to-peak over 784 +/- 1.75 nm, 141 points, ktp at 25 C
    grid = np.linspace(LS - 0.00175, LS + 0.00175, 141)

    def p2p(length_mm, t_ktp=25.0):
        v = [uncompensated(s, idler(LP, s), t_ktp) + compensation(s, idler(LP, s), 25.0, length_mm * 1000)
             for s in grid]
        return max(v) - min(v)
    best = minimize_scalar(p2p, bounds=(0, 50), method="bounded", options={"xatol": 1e-7})
    print("optimal_yvo_mm_25C", repr(best.x))
    best = minimize_scalar(lambda x: p2p(x, t_star), bounds=(0, 50), method="bounded", options={"xatol": 1e-7})
    print("optimal_yvo_mm_tstar", repr(best.x))

    def mirror(d):
        ls, lp = LS, LP
        k = (air(lp) - 1) / lp - (air(ls) - 1) / ls - (air(li) - 1) / li
        return 4 * math.pi * d * k
    print("mirror_100um_rad", repr(mirror(100.0)))


if __name__ == "__main__":
    main()
