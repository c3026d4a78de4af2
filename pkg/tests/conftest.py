import pytest

from multibot.synth import SynthConfig, generate


@pytest.fixture(scope="session")
def small_synth():
    return generate(SynthConfig(n_users=240, seed=11, platform_mix={
        "twitter_v2": 2, "reddit_pushshift": 1, "instagram_crowdtangle": 1}))


@pytest.fixture(scope="session")
def small_model(small_synth):
    from multibot.ensemble import TrainConfig, train_ensemble

    config = TrainConfig(seed=5, folds=3, learner_overrides={
        "random_forest": {"n_estimators": 10}, "gradient_boosting": {"n_estimators": 20}})
    return train_ensemble([("synth", small_synth)], config)




def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(key, []):
            for name, value in getattr(rep, "user_properties", []):
                if name == "acceptance" and value not in lines:
                    lines.append(value)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
