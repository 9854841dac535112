import hypothesis

# Property tests run against both kernel backends in CI; the pure fallback is
# slow enough that per-example deadlines just produce noise.
hypothesis.settings.register_profile(
    "corpusforge",
    deadline=None,
    suppress_health_check=[hypothesis.HealthCheck.too_slow],
)
hypothesis.settings.load_profile("corpusforge")
