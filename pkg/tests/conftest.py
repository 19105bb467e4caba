"""
Общие фикстуры: крошечный бэкбон, маленькие датасеты, временные пути
"""
import pytest
from faker import Faker

from dptlab.handlers.autodiff.tensor import reset_tape
from dptlab.handlers.backbone.config import BackboneConfig
from dptlab.handlers.backbone.models import Backbone
from dptlab.handlers.tasks.generators import generate, get_task_spec


@pytest.fixture(autouse=True)
def clean_tape():
    """Каждый тест начинается и заканчивается с пустой лентой"""
    reset_tape()
    yield
    reset_tape()


@pytest.fixture
def tiny_config():
    """Минимальная архитектура для быстрых тестов"""
    return BackboneConfig(e=8, n_layers=1, n_heads=2, ffn_dim=16, vocab_size=24, max_len=64)


@pytest.fixture
def tiny_backbone(tiny_config):
    """Замороженный бэкбон со случайными весами (без предобучения)"""
    backbone = Backbone.init(tiny_config, seed=0)
    backbone.freeze()
    return backbone


@pytest.fixture
def desk_backbone():
    """Замороженный бэкбон desk-профиля со случайными весами"""
    backbone = Backbone.init(BackboneConfig(), seed=0)
    backbone.freeze()
    return backbone


@pytest.fixture
def tiny_majority(tiny_config):
    """Маленькая задача majority под словарь tiny_config: (train, dev)"""
    spec = get_task_spec('majority', train_size=16, dev_size=8, seed=0, vocab_size=tiny_config.vocab_size)
    return generate(spec)


@pytest.fixture
def fake():
    """Faker с фиксированным сидом"""
    Faker.seed(1234)
    return Faker()


@pytest.fixture
def random_seed(fake):
    """Случайный, но воспроизводимый сид"""
    return fake.pyint(min_value=0, max_value=10_000)


@pytest.fixture
def tiny_checkpoint(tiny_backbone, tmp_path):
    """Чекпоинт tiny_backbone на диске и флаги командной строки под него"""
    path = str(tmp_path / 'tiny.ckpt')
    tiny_backbone.save(path)
    config = tiny_backbone.config
    flags = [
        '--checkpoint', path, '--e', str(config.e), '--n-layers', str(config.n_layers),
        '--n-heads', str(config.n_heads), '--ffn-dim', str(config.ffn_dim),
        '--vocab-size', str(config.vocab_size), '--max-len', str(config.max_len),
        '--c', '4', '--b', '2', '--h', '6', '--epochs', '1', '--train-size', '16', '--dev-size', '8',
        '--probe-every', '1',
    ]
    return path, flags
