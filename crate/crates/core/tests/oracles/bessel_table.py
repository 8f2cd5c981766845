"""Regenerate the frozen J0, J1, Y0, Y1 table used by the specfun unit tests."""

import mpmath

mpmath.mp.dps = 40
XS = [0.1, 0.5, 1.0, 2.0, 3.7, 5.0, 7.5, 8.0, 8.5, 10.0, 12.3, 20.0, 31.4, 50.0, 100.0, 250.7, 1000.0]

for x in XS:
    v = [mpmath.besselj(0, x), mpmath.besselj(1, x), mpmath.bessely(0, x), mpmath.bessely(1, x)]
    print("(" + ", ".join([repr(x)] + [mpmath.nstr(t, 22) for t in v]) + "),")
