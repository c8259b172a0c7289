# Posterior for the 2-point / 2-component case in TwoByTwoHighPrecisionOracle.
from mpmath import mp, mpf, exp, pi

mp.dps = 50
y = [(0, 0, 0), (2, 0, 0)]
x = [(mpf("0.5"), 0, 0), (mpf("1.5"), 1, 0)]
var = [mpf(1), mpf(2)]
omega, vol = mpf("0.25"), mpf(8)
prior = (1 - omega) / 2

for i, xi in enumerate(x):
    num = []
    for m, ym in enumerate(y):
        d2 = sum((a - b) ** 2 for a, b in zip(xi, ym))
        num.append(prior * (2 * pi * var[m]) ** mpf(-1.5) * exp(-d2 / (2 * var[m])))
    num.append(omega / vol)
    den = sum(num)
    for k, v in enumerate(num):
        print(f"#define ESTEP_2X2_{i}{k} {mp.nstr(v / den, 20)}")
