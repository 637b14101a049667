"""JIT-compiled inner loops of the forward model.

Everything here operates on plain floats and small arrays so that both
the public per-step API and the long hourly integration share one
implementation. All updates are explicit Euler with flux limiting: no
layer can be pushed outside [w_r, w_s] in a single step, and every
sub-operation moves water conservatively, so the per-step balance
    d(storage) = infiltration - drainage - transpiration - soil_evap
holds to rounding.

Within the column, interlayer exchange is purely suction-gradient
driven; gravity acts through free drainage at the bottom boundary.
The interface conductivity is the geometric mean of the layer
conductivities, which vanishes against a bone-dry layer and keeps the
suction singularity at the residual content harmless.
"""

import numpy as np
from numba import njit

# Fraction of transpiration extracted from each layer (fixed constant).
ROOT_FRAC = (0.3, 0.4, 0.3)

# Effective-saturation floor when evaluating suction inside flux code.
PSI_S_FLOOR = 1e-3

# Suction cap [m] for interlayer gradients: bounds the wetting-front pull
# into very dry layers (bare-soil evaporation uses the uncapped suction).
PSI_GRAD_CAP = 50.0

# An interface may move at most this fraction of the source layer's
# drainable water (and of the destination's pore room) per step, which
# keeps the explicit scheme stable near the dry singularity.
INTERFACE_TRANSFER_FRAC = 0.25

# Leaf-area floor so regrowth can start from a bare state.
LAI_SEED = 0.05

# Carbon molar mass [kg/mol].
KG_C_PER_MOL = 0.012


@njit(cache=True, nogil=True)
def vg_psi(s, alpha, n):
    """Suction [m] from effective saturation (s must be > 0)."""
    m = 1.0 - 1.0 / n
    return (1.0 / alpha) * (s ** (-1.0 / m) - 1.0) ** (1.0 / n)


@njit(cache=True, nogil=True)
def vg_kcond(s, ks, n):
    """Hydraulic conductivity [m/s] from effective saturation in [0, 1]."""
    m = 1.0 - 1.0 / n
    return ks * np.sqrt(s) * (1.0 - (1.0 - s ** (1.0 / m)) ** m) ** 2


@njit(cache=True, nogil=True)
def _saturation(w, ws, wr):
    s = (w - wr) / (ws - wr)
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    return s


@njit(cache=True, nogil=True)
def _capped_psi(s, alpha, n):
    p = vg_psi(max(s, PSI_S_FLOOR), alpha, n)
    return p if p < PSI_GRAD_CAP else PSI_GRAD_CAP


@njit(cache=True, nogil=True)
def _interface_flux(w, i, j, dz, ks, n, alpha, ws, wr, di, dj, dt):
    """Capillary exchange between layers i (upper) and j (lower).

    Returns the limited downward water volume [m] and applies it.
    """
    si = _saturation(w[i], ws, wr)
    sj = _saturation(w[j], ws, wr)
    kbar = 0.5 * (vg_kcond(si, ks, n) + vg_kcond(sj, ks, n))
    if kbar <= 0.0:
        return 0.0
    q = kbar * (_capped_psi(sj, alpha, n) - _capped_psi(si, alpha, n)) / dz * dt
    if q > 0.0:  # downward
        cap = INTERFACE_TRANSFER_FRAC * min((w[i] - wr) * di, (ws - w[j]) * dj)
        if q > cap:
            q = cap
        if q <= 0.0:
            return 0.0
        w[i] -= q / di
        w[j] += q / dj
    else:
        up = -q
        cap = INTERFACE_TRANSFER_FRAC * min((w[j] - wr) * dj, (ws - w[i]) * di)
        if up > cap:
            up = cap
        if up <= 0.0:
            return 0.0
        w[j] -= up / dj
        w[i] += up / di
        q = -up
    return q


@njit(cache=True, nogil=True)
def soil_step(w, precip, transp_dem, sevap_dem, ks, n, alpha, ws, wr, d0, d1, d2, dt, inf_cap):
    """One soil-moisture update; mutates w, returns fluxes in meters.

    ``inf_cap`` is the maximum infiltration rate [m/s]; ponded intake lets
    it exceed the saturated conductivity.
    """
    transp = 0.0
    if transp_dem > 0.0:
        for i in range(3):
            rf = ROOT_FRAC[i]
            di = d0 if i == 0 else (d1 if i == 1 else d2)
            e = transp_dem * rf * dt
            avail = (w[i] - wr) * di
            if e > avail:
                e = avail
            if e > 0.0:
                w[i] -= e / di
                transp += e

    sevap = 0.0
    if sevap_dem > 0.0:
        e = sevap_dem * dt
        avail = (w[0] - wr) * d0
        if e > avail:
            e = avail
        if e > 0.0:
            w[0] -= e / d0
            sevap = e

    infil = 0.0
    runoff = 0.0
    if precip > 0.0:
        rate = precip if precip < inf_cap else inf_cap
        vol = rate * dt
        room = (ws - w[0]) * d0
        if vol > room:
            vol = room
        if vol > 0.0:
            w[0] += vol / d0
            infil = vol
        runoff = precip * dt - infil

    _interface_flux(w, 0, 1, 0.5 * (d0 + d1), ks, n, alpha, ws, wr, d0, d1, dt)
    _interface_flux(w, 1, 2, 0.5 * (d1 + d2), ks, n, alpha, ws, wr, d1, d2, dt)

    s2 = _saturation(w[2], ws, wr)
    drain = vg_kcond(s2, ks, n) * dt
    avail = (w[2] - wr) * d2
    if drain > avail:
        drain = avail
    if drain > 0.0:
        w[2] -= drain / d2
    else:
        drain = 0.0

    return infil, runoff, drain, transp, sevap


@njit(cache=True, nogil=True)
def veg_step(c, swrad, f_water, vmax0, es, sl, a_l, a_s, a_r, d_l, d_s, d_r, k_ext, swrad_ref, dt):
    """One carbon-pool update; mutates c = [leaf, stem, root]."""
    lai = sl * c[0]
    lai_eff = lai if lai > LAI_SEED else LAI_SEED
    f_light = 1.0 - np.exp(-k_ext * lai_eff)
    f_rad = swrad / swrad_ref
    if f_rad > 1.0:
        f_rad = 1.0
    elif f_rad < 0.0:
        f_rad = 0.0
    npp = KG_C_PER_MOL * vmax0 * f_light * f_rad * f_water  # [kg m-2 s-1]
    gamma = d_l * (1.0 - f_water)  # water-stress senescence

    # Divert leaf allocation when the support constraint is already violated.
    al = a_l
    as_ = a_s
    ar = a_r
    if c[1] + c[2] < es * c[0]:
        al = 0.0
        as_ = a_s + 0.5 * a_l
        ar = a_r + 0.5 * a_l

    nl = c[0] + dt * (al * npp - (d_l + gamma) * c[0])
    ns = c[1] + dt * (as_ * npp - d_s * c[1])
    nr = c[2] + dt * (ar * npp - d_r * c[2])
    # Feasibility fallback: an Euler step from a feasible state must not
    # leave the pools violating the constraint, so retry without leaf growth.
    if al > 0.0 and ns + nr < es * nl:
        as_ = a_s + 0.5 * a_l
        ar = a_r + 0.5 * a_l
        nl = c[0] - dt * (d_l + gamma) * c[0]
        ns = c[1] + dt * (as_ * npp - d_s * c[1])
        nr = c[2] + dt * (ar * npp - d_r * c[2])
    c[0] = nl if nl > 0.0 else 0.0
    c[1] = ns if ns > 0.0 else 0.0
    c[2] = nr if nr > 0.0 else 0.0


@njit(cache=True, nogil=True)
def hour_step(w, c, precip, swrad, pet, par, dt):
    """Advance soil and vegetation by one hour from a common start state."""
    (ks, n, alpha, ws, wr, d0, d1, d2, psi_dry,
     vmax0, es, sl, a_l, a_s, a_r, d_l, d_s, d_r, k_ext, w_wilt, w_fc, swrad_ref,
     inf_cap_factor) = (
        par[0], par[1], par[2], par[3], par[4], par[5], par[6], par[7], par[8],
        par[9], par[10], par[11], par[12], par[13], par[14], par[15], par[16],
        par[17], par[18], par[19], par[20], par[21], par[22])

    lai = sl * c[0]
    canopy = 1.0 - np.exp(-k_ext * lai)
    w_root = ROOT_FRAC[0] * w[0] + ROOT_FRAC[1] * w[1] + ROOT_FRAC[2] * w[2]
    fw = (w_root - w_wilt) / (w_fc - w_wilt)
    if fw < 0.0:
        fw = 0.0
    elif fw > 1.0:
        fw = 1.0
    transp_dem = pet * canopy * fw

    # Bare-soil evaporation shuts off as surface suction approaches psi_dry.
    s0 = _saturation(w[0], ws, wr)
    if s0 <= 0.0:
        beta = 0.0
    else:
        psi0 = vg_psi(max(s0, PSI_S_FLOOR), alpha, n)
        beta = 1.0 - psi0 / psi_dry
        if beta < 0.0:
            beta = 0.0
        elif beta > 1.0:
            beta = 1.0
    sevap_dem = pet * (1.0 - canopy) * beta

    infil, runoff, drain, transp, sevap = soil_step(
        w, precip, transp_dem, sevap_dem, ks, n, alpha, ws, wr, d0, d1, d2, dt,
        inf_cap_factor * ks,
    )
    veg_step(c, swrad, fw, vmax0, es, sl, a_l, a_s, a_r, d_l, d_s, d_r, k_ext, swrad_ref, dt)
    return infil, runoff, drain, transp, sevap


@njit(cache=True, nogil=True)
def integrate(w_init, c_init, precip, swrad, pet, par, spinup_cycles, dt):
    """Run (spinup_cycles + 1) passes over the forcing; record the last one.

    Returns (w_traj, c_traj, lai_traj, flux_traj, w_start) where w_start is
    the soil state at the beginning of the recorded pass and flux columns
    are [infiltration, runoff, drainage, transpiration, soil_evaporation]
    in meters per hour.
    """
    n_hours = precip.shape[0]
    w = w_init.copy()
    c = c_init.copy()
    sl = par[11]
    w_traj = np.empty((n_hours, 3))
    c_traj = np.empty((n_hours, 3))
    lai_traj = np.empty(n_hours)
    flux_traj = np.empty((n_hours, 5))
    w_start = np.empty(3)

    for cyc in range(spinup_cycles + 1):
        final = cyc == spinup_cycles
        if final:
            w_start[:] = w
        for t in range(n_hours):
            infil, runoff, drain, transp, sevap = hour_step(
                w, c, precip[t], swrad[t], pet[t], par, dt
            )
            if final:
                w_traj[t, 0] = w[0]
                w_traj[t, 1] = w[1]
                w_traj[t, 2] = w[2]
                c_traj[t, 0] = c[0]
                c_traj[t, 1] = c[1]
                c_traj[t, 2] = c[2]
                lai_traj[t] = sl * c[0]
                flux_traj[t, 0] = infil
                flux_traj[t, 1] = runoff
                flux_traj[t, 2] = drain
                flux_traj[t, 3] = transp
                flux_traj[t, 4] = sevap
    return w_traj, c_traj, lai_traj, flux_traj, w_start
