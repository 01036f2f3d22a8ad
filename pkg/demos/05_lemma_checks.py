# %% [markdown]
# # Randomized checks of the supporting inequalities
#
# Each check draws seeded instances and reports the worst slack. The
# unaligned gradient-dominance run shows why alignment is needed.

# %%
from lrsense import (check_alignment_lemmas, check_lemma_gradient_dominance,
                     check_lemma_smoothness, check_rip_inner_product, gaussian_operator)

for rep in (
    check_lemma_gradient_dominance(instances=30),
    check_lemma_gradient_dominance(instances=30, align=False),
    check_lemma_smoothness(instances=30),
    check_alignment_lemmas(instances=20),
    check_rip_inner_product(gaussian_operator(30, 30, 3000, 1), r=2, instances=50),
):
    print(rep.check_name, rep.extra, "violations:", rep.violations, "worst margin:", f"{rep.worst_margin:.3e}")
