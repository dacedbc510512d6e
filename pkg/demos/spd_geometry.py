"""A short tour of the matrix-log machinery on SPD matrices.

Covariance matrices live on the cone of symmetric positive-definite
matrices. Comparing them with a plain Frobenius distance ignores that
geometry; mapping them through the matrix logarithm first gives the
log-Euclidean distance, which is affine-invariant in the ways that matter
for feature statistics. This script builds a family of SPD matrices and
contrasts the two distances.
"""
import numpy as np

from logcoral import SymmetricMatrix, matrix_exp, matrix_log, sym_eig, sym_part


def random_spd(dim, rng, scale=1.0):
    a = rng.standard_normal((dim, dim))
    return SymmetricMatrix(sym_part(a @ a.T) * scale + 0.1 * np.eye(dim))


def frobenius(a, b):
    return float(np.linalg.norm(a.data - b.data))


def log_euclidean(a, b):
    return float(np.linalg.norm(matrix_log(a).data - matrix_log(b).data))


def main():
    rng = np.random.default_rng(0)
    d = 6

    c = random_spd(d, rng)
    pair = sym_eig(c)
    print("eigenvalues of a random SPD matrix:")
    print(" ", np.array2string(pair.values, precision=3))

    # log and exp are exact inverses on this cone
    roundtrip = matrix_exp(matrix_log(c))
    print("log/exp roundtrip error: %.2e" % frobenius(c, roundtrip))

    # Uniform scaling moves the two distances very differently. Scaling a
    # covariance by s shifts its log by log(s)*I, so the log-Euclidean
    # distance grows like log(s) while the Frobenius distance grows like s.
    print("\n scale   Frobenius   log-Euclidean")
    for s in (1.5, 4.0, 16.0, 64.0):
        scaled = SymmetricMatrix(c.data * s)
        print(" %5.1f   %9.3f   %13.3f" % (s, frobenius(c, scaled), log_euclidean(c, scaled)))

    # An ill-conditioned matrix dominates the Frobenius picture but not the
    # log-Euclidean one.
    spiky = random_spd(d, rng, scale=30.0)
    mild = random_spd(d, rng)
    print("\ndistances from c to a mild and a spiky SPD matrix:")
    print("  mild : Frobenius %8.2f, log-Euclidean %6.2f" % (frobenius(c, mild), log_euclidean(c, mild)))
    print("  spiky: Frobenius %8.2f, log-Euclidean %6.2f" % (frobenius(c, spiky), log_euclidean(c, spiky)))


if __name__ == "__main__":
    main()
