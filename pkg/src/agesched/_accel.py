"""Optional numba acceleration. Falls back to pure Python when absent.

The decorated functions are written so the compiled and interpreted
versions perform the same IEEE operations in the same order; tests compare
the two paths for exact agreement.
"""

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(func):
            return func

        return deco
