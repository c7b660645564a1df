"""Batch inference over a dataset, exporting logits and penultimate features.

The exporter is a thin adapter: it never reimplements any anomaly scoring.
It runs a pretrained classifier in eval mode over a dataset in native order
(no shuffling), captures the input of the model's final linear layer as the
penultimate feature vector when one can be located, and writes a single
".ooda" dump at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn
from torch.utils.data import DataLoader, Dataset

from .writer import write_dump

# standard CIFAR-10 channel statistics
CIFAR_MEAN = (0.4914, 0.4822, 0.4465)
CIFAR_STD = (0.2470, 0.2435, 0.2616)

INLIER_DATASETS = {"cifar10"}


class ExportError(RuntimeError):
    """Model or dataset cannot be exported; message says why."""


@dataclass
class ExportJob:
    model: str  # hub:<repo>:<entry> or a path to a scripted/pickled module
    dataset: str  # cifar10 | svhn | noise | folder:<path>
    out: Path
    split: str = "test"
    limit: int | None = None  # sample count cap
    device: str = "cpu"
    batch_size: int = 256
    normalize: bool = True
    role: str | None = None  # inlier | outlier; default inferred from dataset
    data_root: Path = field(default_factory=lambda: Path("datasets"))
    seed: int = 0  # noise dataset only

    def __post_init__(self):
        self.out = Path(self.out)
        self.data_root = Path(self.data_root)
        if self.limit is not None and self.limit < 1:
            raise ExportError("sample count cap must be at least 1")
        if self.role not in (None, "inlier", "outlier"):
            raise ExportError(f"unknown role {self.role!r}")

    @property
    def is_inlier(self) -> bool:
        if self.role is not None:
            return self.role == "inlier"
        return self.dataset in INLIER_DATASETS


class NoiseImages(Dataset):
    """RGB images with every pixel i.i.d. Gaussian (mean 0.5, std 1)."""

    def __init__(self, n: int, seed: int = 0, size: int = 32, mean: float = 0.5, std: float = 1.0):
        self.n = n
        self.seed = seed
        self.size = size
        self.mean = mean
        self.std = std

    def __len__(self):
        return self.n

    def __getitem__(self, idx):
        gen = torch.Generator().manual_seed(self.seed * 1_000_003 + idx)
        img = self.mean + self.std * torch.randn((3, self.size, self.size), generator=gen)
        return img, -1


def load_model(spec: str, device: str) -> nn.Module:
    if spec.startswith("hub:"):
        parts = spec.split(":", 2)
        if len(parts) != 3:
            raise ExportError("hub model spec is hub:<repo>:<entry>")
        try:
            model = torch.hub.load(parts[1], parts[2], pretrained=True, verbose=False)
        except Exception as e:
            raise ExportError(f"hub download failed for {spec}: {e}") from e
    else:
        path = Path(spec)
        if not path.is_file():
            raise ExportError(f"model file not found: {path}")
        try:
            model = torch.jit.load(str(path), map_location=device)
        except Exception:
            try:
                model = torch.load(path, map_location=device, weights_only=False)
            except Exception as e:
                raise ExportError(f"cannot load model {path}: {e}") from e
    if not isinstance(model, (nn.Module, torch.jit.ScriptModule)):
        raise ExportError(f"{spec} did not load to a torch module")
    model.eval()
    return model.to(device)


def build_dataset(job: ExportJob) -> Dataset:
    from torchvision import datasets, transforms

    norm = [transforms.Normalize(CIFAR_MEAN, CIFAR_STD)] if job.normalize else []
    if job.dataset == "cifar10":
        tf = transforms.Compose([transforms.ToTensor(), *norm])
        try:
            return datasets.CIFAR10(
                str(job.data_root), train=(job.split == "train"), transform=tf, download=True
            )
        except Exception as e:
            raise ExportError(f"cifar10 unavailable: {e}") from e
    if job.dataset == "svhn":
        tf = transforms.Compose([transforms.ToTensor(), *norm])
        try:
            return datasets.SVHN(
                str(job.data_root / "svhn"), split=job.split, transform=tf, download=True
            )
        except Exception as e:
            raise ExportError(f"svhn unavailable: {e}") from e
    if job.dataset == "noise":
        n = job.limit or 10_000
        base = NoiseImages(n, seed=job.seed)
        if not job.normalize:
            return base
        norm_tf = transforms.Normalize(CIFAR_MEAN, CIFAR_STD)

        class _Normalized(Dataset):
            def __len__(self):
                return len(base)

            def __getitem__(self, idx):
                img, label = base[idx]
                return norm_tf(img), label

        return _Normalized()
    if job.dataset.startswith("folder:"):
        root = job.dataset.split(":", 1)[1]
        # downscale to CIFAR input dimensions (e.g. Tiny ImageNet 64x64 -> 32x32)
        tf = transforms.Compose(
            [transforms.Resize((32, 32)), transforms.ToTensor(), *norm]
        )
        try:
            return datasets.ImageFolder(root, transform=tf)
        except Exception as e:
            raise ExportError(f"image folder unavailable: {e}") from e
    raise ExportError(f"unknown dataset {job.dataset!r}")


def _find_last_linear(model: nn.Module):
    """Last linear layer, seen through either eager or scripted modules."""
    last = None
    try:
        for module in model.modules():
            scripted_name = getattr(module, "original_name", None)
            if isinstance(module, nn.Linear) or scripted_name == "Linear":
                last = module
    except Exception:
        return None
    return last


def export_activations(job: ExportJob) -> Path:
    """Run the model over the dataset and write one dump; returns the path.

    Records appear in the dataset's native order.  Labels are stored for
    inlier sets and forced to -1 for outlier sets.  Features are included
    whenever the model's final linear layer can be hooked.
    """
    device = job.device
    if device.startswith("cuda") and not torch.cuda.is_available():
        device = "cpu"
    model = load_model(job.model, device)
    dataset = build_dataset(job)

    captured: list[torch.Tensor] = []
    head = _find_last_linear(model)
    hook_handle = None
    if head is not None:
        def hook(_module, inputs, _output):
            captured.append(inputs[0].detach().to("cpu", torch.float32))

        try:
            hook_handle = head.register_forward_hook(hook)
        except Exception:
            hook_handle = None

    loader = DataLoader(dataset, batch_size=job.batch_size, shuffle=False)
    all_logits: list[np.ndarray] = []
    all_labels: list[np.ndarray] = []
    all_features: list[np.ndarray] = []
    remaining = job.limit
    try:
        with torch.no_grad():
            for images, labels in loader:
                if remaining is not None and remaining <= 0:
                    break
                if remaining is not None and len(images) > remaining:
                    images, labels = images[:remaining], labels[:remaining]
                captured.clear()
                out = model(images.to(device))
                if out.ndim != 2:
                    raise ExportError(
                        f"model head produced shape {tuple(out.shape)}, expected (batch, classes)"
                    )
                all_logits.append(out.detach().to("cpu", torch.float32).numpy())
                all_labels.append(np.asarray(labels).reshape(-1))
                if hook_handle is not None and captured:
                    feats = captured[-1]
                    all_features.append(feats.reshape(len(images), -1).numpy())
                if remaining is not None:
                    remaining -= len(images)
    finally:
        if hook_handle is not None:
            hook_handle.remove()

    if not all_logits:
        raise ExportError("dataset produced no samples")
    logits = np.concatenate(all_logits)
    labels = np.concatenate(all_labels).astype(np.int64)
    if not job.is_inlier:
        labels = np.full(len(logits), -1, dtype=np.int64)
    features = None
    if all_features and len(np.concatenate(all_features)) == len(logits):
        features = np.concatenate(all_features)

    job.out.parent.mkdir(parents=True, exist_ok=True)
    write_dump(job.out, logits, labels=labels, features=features)
    return job.out
