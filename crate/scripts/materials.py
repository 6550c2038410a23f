"""Independent reference evaluation of the shipped dispersion formulas.

Used offline to freeze expected constants in the Rust tests and to
calibrate the default achromatic waveplate stack. Wavelengths in um.
"""
import math

def ktp_y(l):  # Kato & Takaoka 2002
    l2 = l * l
    return math.sqrt(3.45018 + 0.04341 / (l2 - 0.04597) + 16.98825 / (l2 - 39.43799))

def ktp_z(l):
    l2 = l * l
    return math.sqrt(4.59423 + 0.06206 / (l2 - 0.04763) + 110.80672 / (l2 - 86.12171))

def emanueli(a, b, l, dt):
    n1 = sum(c / l**m for m, c in enumerate(a))
    n2 = sum(c / l**m for m, c in enumerate(b))
    return n1 * dt + n2 * dt * dt

KTP_Y_T = ([6.2897e-6, 6.3061e-6, -6.0629e-6, 2.6486e-6], [-0.14445e-8, 2.2244e-8, -3.5770e-8, 1.3470e-8])
KTP_Z_T = ([9.9587e-6, 9.9228e-6, -8.9603e-6, 4.1010e-6], [-1.1882e-8, 10.459e-8, -9.8136e-8, 3.1481e-8])

def ktp_yT(l, t):
    return ktp_y(l) + emanueli(*KTP_Y_T, l, t - 25.0)

def ktp_zT(l, t):
    return ktp_z(l) + emanueli(*KTP_Z_T, l, t - 25.0)

def yvo_o(l, t=25.0):
    l2 = l * l
    return math.sqrt(3.77834 + 0.069736 / (l2 - 0.04724) - 0.0108133 * l2) + 8.5e-6 * (t - 25.0)

def yvo_e(l, t=25.0):
    l2 = l * l
    return math.sqrt(4.59905 + 0.110534 / (l2 - 0.04813) - 0.0122676 * l2) + 3.0e-6 * (t - 25.0)

def sell3(l, b, c):
    l2 = l * l
    return math.sqrt(1.0 + sum(bi * l2 / (l2 - ci * ci) for bi, ci in zip(b, c)))

def mgf2_o(l):
    return sell3(l, [0.48755108, 0.39875031, 2.3120353], [0.04338408, 0.09461442, 23.793604])

def mgf2_e(l):
    return sell3(l, [0.41344023, 0.50497499, 2.4904862], [0.03684262, 0.09076162, 23.771995])

def quartz_o(l):
    l2 = l * l
    return math.sqrt(1.28604141 + 1.07044083 * l2 / (l2 - 1.00585997e-2) + 1.10202242 * l2 / (l2 - 100.0))

def quartz_e(l):
    l2 = l * l
    return math.sqrt(1.28851804 + 1.09509924 * l2 / (l2 - 1.02101864e-2) + 1.15662475 * l2 / (l2 - 100.0))

def air(l):  # Ciddor 1996, 15 C, 101.325 kPa, dry, 450 ppm CO2
    s2 = 1.0 / (l * l)
    return 1.0 + 0.05792105 / (238.0185 - s2) + 0.00167917 / (57.362 - s2)
