"""Network architectures: 1D ResNet, a 1D U-Net-style classifier, and a
3-layer MLP.

All three map (batch, 1, K) histograms to (batch, n_classes) logits. The
ResNet is a stack of residual blocks (two conv-BN-ReLU stages plus an
identity or projection shortcut) with stride-2 downsampling per block,
global average pooling, and a single linear classifier. The U-Net variant
keeps the encoder-decoder-with-skips shape of its namesake but ends in a
pooled linear head for classification; this adaptation is an approximation
of the segmentation original rather than a faithful port.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn

ARCHITECTURES = ("resnet1d", "unet1d", "mlp3")


@dataclass(frozen=True)
class NetSpec:
    architecture: str
    input_length: int = 1024
    n_classes: int = 18
    # resnet1d: (channels, downsample factor) per residual block
    blocks: tuple = ((16, 2), (32, 2), (64, 2), (128, 2))
    stem_channels: int = 16
    kernel_size: int = 7     # conv kernel inside residual blocks
    stem_kernel: int = 15    # first-layer kernel
    # unet1d: encoder channel ladder
    unet_channels: tuple = (16, 32, 64)
    # mlp3: hidden widths of the two non-output layers
    mlp_hidden: tuple = (512, 128)

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}; "
                             f"choose from {ARCHITECTURES}")
        if self.input_length < 8 or self.n_classes < 2:
            raise ValueError("input_length must be >= 8 and n_classes >= 2")
        depth_factor = 1
        for _, stride in self.blocks:
            depth_factor *= stride
        if self.architecture == "resnet1d" and self.input_length < depth_factor:
            raise ValueError("input too short for the configured block strides")
        if self.architecture == "unet1d" and self.input_length % (
                2 ** (len(self.unet_channels) - 1)) != 0:
            raise ValueError("input_length must be divisible by the U-Net "
                             "downsampling factor")


class ResidualBlock(nn.Module):
    """conv-BN-ReLU-conv-BN plus an identity/projection shortcut, then ReLU.

    Downsampling happens through an average pool after the residual sum
    rather than strided convolution: histogram returns are only a few bins
    wide, and strided sampling aliases them (a one-bin shift of a spike
    changes which samples survive), which measurably hurts generalization
    on photon-starved inputs.
    """

    def __init__(self, c_in, c_out, kernel_size=7, downsample=1):
        super().__init__()
        pad = kernel_size // 2
        self.conv1 = nn.Conv1d(c_in, c_out, kernel_size, padding=pad)
        self.bn1 = nn.BatchNorm1d(c_out)
        self.conv2 = nn.Conv1d(c_out, c_out, kernel_size, padding=pad)
        self.bn2 = nn.BatchNorm1d(c_out)
        if c_in != c_out:
            self.shortcut = nn.Sequential(nn.Conv1d(c_in, c_out, 1),
                                          nn.BatchNorm1d(c_out))
        else:
            self.shortcut = nn.Identity()
        self.relu = nn.ReLU()
        self.down = nn.AvgPool1d(downsample) if downsample > 1 else nn.Identity()

    def forward(self, x):
        path = self.bn2(self.conv2(self.relu(self.bn1(self.conv1(x)))))
        return self.down(self.relu(path + self.shortcut(x)))


class ResNet1d(nn.Module):
    def __init__(self, spec: NetSpec):
        super().__init__()
        self.stem = nn.Sequential(
            nn.Conv1d(1, spec.stem_channels, spec.stem_kernel,
                      padding=spec.stem_kernel // 2),
            nn.BatchNorm1d(spec.stem_channels), nn.ReLU())
        blocks = []
        c_in = spec.stem_channels
        for c_out, down in spec.blocks:
            blocks.append(ResidualBlock(c_in, c_out, spec.kernel_size, down))
            c_in = c_out
        self.blocks = nn.Sequential(*blocks)
        self.pool = nn.AdaptiveAvgPool1d(1)
        self.classifier = nn.Linear(c_in, spec.n_classes)

    def forward(self, x):
        z = self.pool(self.blocks(self.stem(x))).flatten(1)
        return self.classifier(z)


def _conv_block(c_in, c_out):
    return nn.Sequential(nn.Conv1d(c_in, c_out, 5, padding=2),
                         nn.BatchNorm1d(c_out), nn.ReLU())


class UNet1d(nn.Module):
    """Encoder-decoder with skip concatenations and a pooled linear head.

    The classification head pools both the bottleneck and the final decoder
    features; pooling only the narrow decoder output starves the classifier
    of features when classes outnumber first-level channels.
    """

    def __init__(self, spec: NetSpec):
        super().__init__()
        chans = spec.unet_channels
        self.encoders = nn.ModuleList()
        c_in = 1
        for c in chans:
            self.encoders.append(_conv_block(c_in, c))
            c_in = c
        self.pool = nn.MaxPool1d(2)
        self.decoders = nn.ModuleList()
        self.upsamples = nn.ModuleList()
        for deep, skip in zip(reversed(chans[1:]), reversed(chans[:-1])):
            self.upsamples.append(nn.ConvTranspose1d(deep, skip, 2, stride=2))
            self.decoders.append(_conv_block(2 * skip, skip))
        self.gap = nn.AdaptiveAvgPool1d(1)
        self.classifier = nn.Linear(chans[0] + chans[-1], spec.n_classes)

    def forward(self, x):
        skips = []
        for i, enc in enumerate(self.encoders):
            x = enc(x)
            if i < len(self.encoders) - 1:
                skips.append(x)
                x = self.pool(x)
        bottleneck = self.gap(x).flatten(1)
        for up, dec, skip in zip(self.upsamples, self.decoders, reversed(skips)):
            x = up(x)
            x = dec(torch.cat([x, skip], dim=1))
        features = torch.cat([self.gap(x).flatten(1), bottleneck], dim=1)
        return self.classifier(features)


class MLP3(nn.Module):
    """Three fully connected layers on the flattened histogram."""

    def __init__(self, spec: NetSpec):
        super().__init__()
        h1, h2 = spec.mlp_hidden
        self.net = nn.Sequential(
            nn.Flatten(),
            nn.Linear(spec.input_length, h1), nn.ReLU(),
            nn.Linear(h1, h2), nn.ReLU(),
            nn.Linear(h2, spec.n_classes))

    def forward(self, x):
        return self.net(x)


def build_model(spec: NetSpec) -> nn.Module:
    if spec.architecture == "resnet1d":
        return ResNet1d(spec)
    if spec.architecture == "unet1d":
        return UNet1d(spec)
    return MLP3(spec)


def small_spec(architecture: str, input_length: int, n_classes: int) -> NetSpec:
    """Desk-scale configuration used by the test suite and quick runs."""
    return NetSpec(architecture, input_length, n_classes,
                   blocks=((8, 2), (16, 2), (32, 2), (64, 2)), stem_channels=8,
                   unet_channels=(8, 16, 32), mlp_hidden=(256, 64))


def default_spec(architecture: str, input_length: int, n_classes: int) -> NetSpec:
    return NetSpec(architecture, input_length=input_length, n_classes=n_classes)
