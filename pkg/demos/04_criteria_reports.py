"""Existence criteria, evaluated symbolically over all indices.

The diagonal model reduces every question to the sequences alpha_k and
sigma_k.  Square integrability needs sup(2 alpha_k + sigma_k^2) finite; a
flow needs the extreme-value supremum rho finite; the spectrum of the flow
operator classifies by where sigma_k accumulates.  Systems of multiplication
operators reduce to sup-norm series of the basis functions; the Brownian
sheet and trigonometric homogeneous fields are the two worked model cases.
"""

from linflow import (
    DiagonalModel,
    brownian_sheet_criteria,
    classify_spectrum,
    flow_criterion_rho,
    homogeneous_field_criteria,
    l2_solvability,
)
from linflow.rules import SequenceRule, constant, log_power, power

CASES = [
    ("classic: alpha = 0, sigma = 1", constant(0.0), constant(1.0)),
    ("alpha_k = -k, sigma_k = sqrt(k)", power(-1.0, 1.0), power(1.0, 0.5)),
    ("alpha = 0, sigma_k = 1/log(k+1)", constant(0.0), log_power(1.0, -1.0)),
    ("alpha = 0, sigma_k = log(k+1)", constant(0.0), log_power(1.0, 1.0)),
]

for label, alpha, sigma in CASES:
    model = DiagonalModel(alpha=alpha, sigma=sigma, cutoff=10**5)
    solv = l2_solvability(model)
    rho = flow_criterion_rho(model, 0.0, 1.0)
    print(label)
    print(f"  sup(2 alpha + sigma^2) = {solv.sup_value:g}  -> square integrable: {solv.solvable}")
    print(f"  rho(0, 1)              = {rho.value:g}  -> flow exists: {not rho.diverges}")
    if not rho.diverges:
        print(f"  spectrum class         = {classify_spectrum(model, 0.0, 1.0).classification}")
    print()

print("multiplication-operator systems (trigonometric homogeneous fields):")
for label, rule in [
    ("a_k = 1/k", power(1.0, -1.0)),
    ("a_k = 1/(k log^2(k+1))", SequenceRule(1.0, -1.0, -2.0)),
]:
    rep = homogeneous_field_criteria(rule)
    print(f"  {label:24s} total mass = {rep.sum_sq_sup:g}; "
          f"solvable: {rep.l2_solvable}; "
          f"sum |a| sqrt(log k) = {rep.sqrt_log_sum_sup:g} -> "
          f"flow sufficient: {rep.flow_exists_sufficient}")

sheet = brownian_sheet_criteria(L=2.0, d=2)
print(f"\nBrownian sheet on [0, 2)^2: sup sum e_k^2 = {sheet.sum_sq_sup:g}; "
      f"solvable: {sheet.l2_solvable}; flow: {sheet.flow_exists_sufficient}")
print(f"  ({sheet.note})")
