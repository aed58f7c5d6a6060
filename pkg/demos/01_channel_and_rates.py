"""
Channel, power split and SIC rates on one subband
=================================================

Drop a few users, draw one slot of fading and look at what a two-user
NOMA pair achieves compared with giving the subband to one user.
"""

import numpy as np

from nomasched.channel import CellGeometry, FadingProcess, doppler_hz, next_realization, place_users
from nomasched.power import equal_subband_power, ftpa_allocate
from nomasched.rate import user_rate

rng = np.random.default_rng(0)
geo = CellGeometry()

# four users, area-uniform in the cell
users = place_users(4, geo, rng)
for u in users:
    print(f"user {u.user_id}: {u.distance_m:6.1f} m, pathloss {u.pathloss_db:6.1f} dB")

# one slot of frequency-selective fading at 50 km/h
fade = FadingProcess(4, geo, doppler_hz(50.0, geo.carrier_hz), rng)
real = next_realization(fade, users, geo)
g = real.normalized_gain[0]  # subband 0
print("\nnormalised gains on subband 0:", np.array2string(g, precision=3))

# pair the strongest and the weakest user
near, far = int(np.argmax(g)), int(np.argmin(g))
p_s = equal_subband_power(geo)
alloc = ftpa_allocate((near, far), g[[near, far]], p_s)
print(f"\nsubband power {p_s:.1f} mW, split {alloc.per_user}")

rv = user_rate((near, far), [alloc.per_user[near], alloc.per_user[far]],
               real.gain2[0, [near, far]], real.noise_power[0, [near, far]], geo.subband_hz)
print("pair rates (kbps):", {k: round(v / 1e3, 1) for k, v in rv.as_dict().items()})

# the far user alone on the subband
solo = user_rate((far,), [p_s], real.gain2[0, [far]], real.noise_power[0, [far]], geo.subband_hz)
print(f"far user alone: {solo.rates[0] / 1e3:.1f} kbps")
