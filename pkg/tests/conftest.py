import mpmath

# library code always pins its own working precision; raise the ambient
# precision so that test-side comparisons do not round intermediate values
mpmath.mp.prec = 160
