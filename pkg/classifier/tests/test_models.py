import numpy as np
import pytest
import torch

from tofnet.models import (ARCHITECTURES, NetSpec, ResidualBlock, build_model,
                           small_spec)


@pytest.mark.parametrize("arch", ARCHITECTURES)
def test_forward_shapes_and_finiteness(arch):
    spec = small_spec(arch, 128, 18)
    model = build_model(spec)
    model.eval()
    out = model(torch.zeros(5, 1, 128))
    assert out.shape == (5, 18)
    assert torch.isfinite(out).all()


def test_default_spec_input_1024():
    model = build_model(NetSpec("resnet1d", input_length=1024, n_classes=18))
    model.eval()
    out = model(torch.randn(2, 1, 1024))
    assert out.shape == (2, 18)


def test_residual_identity_shortcut():
    # zeroing the conv path reduces the block to relu(x) == x for x >= 0
    torch.manual_seed(0)
    block = ResidualBlock(8, 8, kernel_size=7, downsample=1)
    block.eval()
    with torch.no_grad():
        block.bn2.weight.zero_()
        block.bn2.bias.zero_()
    x = torch.rand(3, 8, 32)
    out = block(x)
    assert torch.equal(out, x)


def test_residual_projection_shortcut():
    torch.manual_seed(0)
    block = ResidualBlock(4, 8, kernel_size=7, downsample=1)
    block.eval()
    with torch.no_grad():
        block.bn2.weight.zero_()
        block.bn2.bias.zero_()
    x = torch.rand(3, 4, 32)
    out = block(x)
    expected = torch.relu(block.shortcut(x))
    assert torch.allclose(out, expected, atol=0.0)


def test_netspec_validation():
    with pytest.raises(ValueError):
        NetSpec("convnet2d")
    with pytest.raises(ValueError):
        NetSpec("resnet1d", input_length=8, blocks=((4, 2),) * 5)
    with pytest.raises(ValueError):
        NetSpec("unet1d", input_length=126)  # not divisible by 4


def test_gradients_match_finite_differences():
    # miniature double-precision net; central differences at 1e-3 relative
    torch.manual_seed(3)
    spec = NetSpec("resnet1d", input_length=16, n_classes=2,
                   blocks=((3, 2),), stem_channels=2, kernel_size=3,
                   stem_kernel=3)
    model = build_model(spec).double()
    model.train()
    x = torch.randn(8, 1, 16, dtype=torch.float64)
    y = torch.randint(0, 2, (8,))
    loss_fn = torch.nn.CrossEntropyLoss()

    def loss_value():
        return loss_fn(model(x), y)

    loss = loss_value()
    loss.backward()
    rng = np.random.default_rng(0)
    checked = 0
    for name, param in model.named_parameters():
        flat = param.detach().reshape(-1)
        grad = param.grad.reshape(-1)
        for _ in range(2):
            i = int(rng.integers(flat.shape[0]))
            h = 1e-6 * max(1.0, abs(float(flat[i])))
            with torch.no_grad():
                orig = float(flat[i])
                flat[i] = orig + h
                up = float(loss_value())
                flat[i] = orig - h
                down = float(loss_value())
                flat[i] = orig
            numeric = (up - down) / (2 * h)
            analytic = float(grad[i])
            # conv biases feeding a BatchNorm have identically zero gradient;
            # the 1e-4 floor keeps finite-difference noise from dividing by ~0
            scale = max(abs(numeric), abs(analytic), 1e-4)
            assert abs(numeric - analytic) / scale < 1e-3, (name, i)
            checked += 1
    assert checked >= 10
