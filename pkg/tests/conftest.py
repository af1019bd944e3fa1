import pytest

from mocha.core import MessageStore, TeamConfig, TopicSpec


def make_team(n_robots=4, n_topics=2, rate_hz=1000.0):
    topics = [TopicSpec(f"t{j}", priority=j % 3, rate_hz=rate_hz, hint_bytes=32) for j in range(n_topics)]
    return TeamConfig.uniform(n_robots, topics)


@pytest.fixture
def team():
    return make_team()


@pytest.fixture
def stores(team):
    return [MessageStore(team, rid) for rid in range(team.n_robots)]
