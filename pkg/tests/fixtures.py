"""Generated audio used by the separation tests."""

import numpy as np

SR = 22050


def harmonic_sources(seed: int, duration: float = 3.0, n_sources: int = 3, sr: int = SR):
    """Gated harmonic tones with distinct pitches and on/off patterns.

    Each source plays one pitch with five decaying partials and switches
    on or off every 0.25 s (10 ms fades); patterns are drawn per seed.
    """
    rng = np.random.default_rng(seed)
    n = int(duration * sr)
    t = np.arange(n) / sr
    pitches = rng.choice([196.0, 261.6, 329.6, 440.0, 587.3, 740.0], size=n_sources, replace=False)
    seg = int(0.25 * sr)
    fade = int(0.01 * sr)
    ramp = np.ones(seg)
    ramp[:fade] = np.linspace(0, 1, fade)
    ramp[-fade:] = np.linspace(1, 0, fade)
    out = np.zeros((n_sources, n))
    for j, f0 in enumerate(pitches):
        tone = sum(0.6 ** h * np.sin(2 * np.pi * f0 * (h + 1) * t + rng.uniform(0, 2 * np.pi))
                   for h in range(5))
        gate = np.zeros(n)
        for m in range(n // seg):
            if rng.random() < 0.5:
                gate[m * seg:(m + 1) * seg] = ramp
        if not gate.any():
            gate[:seg] = ramp
        out[j] = 0.2 * tone * gate
    return out
