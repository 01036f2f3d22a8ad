# %% [markdown]
# # The regularizer barely changes the trajectory
#
# Same instance and initialization, two solvers: the vanilla objective and
# the one with `lambda * ||X^T X - Y^T Y||^2`, `lambda = 1/64`.

# %%
from lrsense.harness import load_config, run_comparison

a = load_config("configs/a2_vanilla.json", ["output.csv_path=null"])
b = load_config("configs/a2_regularized.json", ["output.csv_path=null"])
summary, ra, rb = run_comparison(a, b)

# %%
for t in range(0, 60, 10):
    va, vb = ra.trace.recon_error[t], rb.trace.recon_error[t]
    print(f"t={t:3d}  vanilla={va:.4e}  regularized={vb:.4e}  ratio={va / vb:.5f}")
print("max ratio before both errors drop below 1e-6:", summary["max_ratio"])
