import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import (kb_from, pace_su, parsed, relax_su, two_speaker, urge_su)


@pytest.fixture
def urge_utt():
    return parsed("c1", 0, urge_su())


@pytest.fixture
def pace_utt():
    return parsed("c1", 0, pace_su())


@pytest.fixture
def relax_utt():
    return parsed("c1", 0, relax_su())


@pytest.fixture
def small_kb():
    return kb_from([
        ("e1", "催促商家", "event", "xIntent", "想要尽快拿到物资"),
        ("e1", "催促商家", "event", "xReact", "着急"),
        ("e2", "进入大学", "event", "xAttr", "开心"),
        ("e2", "进入大学", "event", "xNeed", "通过高考"),
        ("e2", "进入大学", "event", "xWant", "放松一下"),
        ("n1", "大学", "entity", "xAttr", "读书的地方"),
        ("n2", "商家", "entity", "xAttr", "卖东西的人"),
    ])


@pytest.fixture
def chat():
    return two_speaker(["你今天怎么样", "我刚进了大学很开心", "恭喜你啊", "谢谢你"])
