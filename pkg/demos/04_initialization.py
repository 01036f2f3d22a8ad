# %% [markdown]
# # Better starts from a few projected gradient steps
#
# With fewer measurements the spectral start is rougher. Each extra truncated
# projected step shrinks its distance to the planted factors.

# %%
from lrsense import gaussian_operator, make_ground_truth, pgd_init, procrustes_distance

truth = make_ground_truth(50, 50, 3, kappa=2.0, seed=100)
op = gaussian_operator(50, 50, 3000, seed=200)
y = op.apply(truth.Mstar)

for tau in (1, 2, 4, 8):
    print(f"tau={tau}  procrustes distance={procrustes_distance(pgd_init(y, op, 3, tau), truth):.4f}")
