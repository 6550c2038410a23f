"""Least-squares calibration of the default two-layer MgF2/quartz retarder.

Targets: 0.93 quarter-wave at 785 nm and 850 nm, one seventh of a wave at
405.4 nm, zero tilt. Layers are crossed (MgF2 +1, quartz -1). The fitted
thicknesses are rounded to 0.01 um and written into the bundled
waveplate JSON.
"""
import math

from scipy.optimize import least_squares

from materials import mgf2_e, mgf2_o, quartz_e, quartz_o

TARGETS = [
    (0.785, 0.93 * math.pi / 2),
    (0.850, 0.93 * math.pi / 2),
    (0.4054, 2 * math.pi / 7),
]


def retardation(d, lam):
    dn_mgf2 = mgf2_e(lam) - mgf2_o(lam)
    dn_qz = quartz_e(lam) - quartz_o(lam)
    return 2 * math.pi * (dn_mgf2 * d[0] - dn_qz * d[1]) / lam


def residuals(d):
    return [(retardation(d, lam) - t) / t for lam, t in TARGETS]


def main():
    best = None
    for d0 in (50, 100, 200, 400, 800, 1600):
        fit = least_squares(residuals, [d0, d0])
        if min(fit.x) > 0 and (best is None or fit.cost < best.cost):
            best = fit
    d = [round(x, 2) for x in best.x]
    print("thickness_um mgf2=%.2f quartz=%.2f" % tuple(d))
    for lam, t in TARGETS:
        g = retardation(d, lam)
        print("  %.4f um: %.6f rad (target %.6f, rel %.4f)" % (lam, g, t, g / t - 1))


if __name__ == "__main__":
    main()
