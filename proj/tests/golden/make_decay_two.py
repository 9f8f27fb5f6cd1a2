"""Reference trace for a two-component student on a one-unit break.

Replays classical RK4 on dz/dt = -gamma * z with the same operation order
as a straightforward implementation and prints the CSV trace.
"""

GAMMAS = (1.0, 0.5)
Z0 = (1.0, 2.0)
DT = 0.25
STEPS = 4


def fmt(v):
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def rate(z):
    return [-g * x for g, x in zip(GAMMAS, z)]


def rk4(z, h):
    k1 = rate(z)
    k2 = rate([x + 0.5 * h * k for x, k in zip(z, k1)])
    k3 = rate([x + 0.5 * h * k for x, k in zip(z, k2)])
    k4 = rate([x + h * k for x, k in zip(z, k3)])
    return [x + h / 6.0 * (a + 2.0 * b + 2.0 * c + d) for x, a, b, c, d in zip(z, k1, k2, k3, k4)]


def row(t, z):
    total = 0.0
    for x in z:
        total += x
    pr = (0.0 + z[1] * 1.0) / total if total > 0 else 0.0
    return ",".join([fmt(t), "0", "0"] + [fmt(x) for x in z] + [fmt(total), fmt(pr)])


lines = ["t,u,teaching,z1,z2,z,pr"]
z = list(Z0)
lines.append(row(0.0, z))
for k in range(STEPS):
    z = rk4(z, DT)
    lines.append(row((k + 1) * DT, z))
print("\n".join(lines))
