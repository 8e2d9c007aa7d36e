"""
Diffusion channel response
==========================

A molecule released at distance ``x`` from an absorbing receiver arrives
after a random delay.  Here we look at the arrival density ``h(t)``, its
peak at ``x**2 / (6 D)``, and the heavy ``t**-1.5`` tail that makes
consecutive symbols overlap.
"""
import numpy as np

from diffpulse import ChannelParams, capture_cdf, impulse_response, peak_time

p = ChannelParams(x=1.0, D=1.0)
tm = peak_time(p)
print(f"peak time t_max = {tm:.6f}")

# %%
# Arrival density and cumulative capture probability on a log time axis.
t = np.logspace(-1.5, 3, 400) * tm
h = impulse_response(p, t)
Phi = capture_cdf(p, t)
print(f"captured by 10 t_max:  {capture_cdf(p, 10 * tm):.4f}")
print(f"captured by 100 t_max: {capture_cdf(p, 100 * tm):.4f}")

# %%
# The late tail decays like t^(-3/2); a straight line on log-log axes.
late = t > 50 * tm
slope = np.polyfit(np.log(t[late]), np.log(h[late]), 1)[0]
print(f"fitted tail slope: {slope:.3f}")

# %%
# Plot, when matplotlib is around.
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
    ax[0].loglog(t / tm, h)
    ax[0].axvline(1.0, ls=":", c="k")
    ax[0].set(xlabel="t / t_max", ylabel="h(t)")
    ax[1].semilogx(t / tm, Phi)
    ax[1].set(xlabel="t / t_max", ylabel="captured fraction")
    fig.tight_layout()
    fig.savefig("channel_response.png", dpi=120)
