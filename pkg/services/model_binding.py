"""
Binding of model specs to weight stores, and deterministically seeded reference weights
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union
import numpy as np
import structlog

from core.exceptions import ModelBindingError, ShapeMismatchError
from core.tensor_core import ConvWeights1x1, ConvWeights3x3
from core.weight_store import WeightStore
from models.model_spec import CnnBodySpec, ModelSpec
from services.sparse_cnn import MaskedConvBlock
from services.sparse_transformer import StlWeights

logger = structlog.get_logger()

Shape = Tuple[int, ...]

@dataclass(frozen=True)
class TensorDecl:
    """A tensor a model spec requires; alt_shapes lists other accepted storage forms"""
    name: str
    shape: Shape
    alt_shapes: Tuple[Shape, ...] = ()

    def accepts(self, shape: Shape) -> bool:
        return tuple(shape) == self.shape or tuple(shape) in self.alt_shapes

@dataclass(frozen=True)
class BoundModel:
    """A spec with every declared tensor resolved"""
    spec: ModelSpec
    head: ConvWeights3x3
    blocks: List[MaskedConvBlock] = field(default_factory=list)
    layers: List[StlWeights] = field(default_factory=list)
    tail_conv: Union[ConvWeights3x3, ConvWeights1x1, None] = None
    tail_final: Optional[ConvWeights3x3] = None
    unused: List[str] = field(default_factory=list)

STL_TENSORS = [
    ("qkv.weight", lambda c, hid: (3 * c, c)), ("qkv.bias", lambda c, hid: (3 * c,)),
    ("proj.weight", lambda c, hid: (c, c)), ("proj.bias", lambda c, hid: (c,)),
    ("ln1.weight", lambda c, hid: (c,)), ("ln1.bias", lambda c, hid: (c,)),
    ("ln2.weight", lambda c, hid: (c,)), ("ln2.bias", lambda c, hid: (c,)),
    ("fc1.weight", lambda c, hid: (hid, c)), ("fc1.bias", lambda c, hid: (hid,)),
    ("fc2.weight", lambda c, hid: (c, hid)), ("fc2.bias", lambda c, hid: (c,)),
]

def declared_tensors(spec: ModelSpec) -> List[TensorDecl]:
    """Every tensor name and shape a model spec requires, in storage order"""
    c = spec.channels
    decls = [TensorDecl("head.weight", (c, 3, 3, 3)), TensorDecl("head.bias", (c,))]

    if isinstance(spec.body, CnnBodySpec):
        for i, ((c_in, c_out), block) in enumerate(zip(spec.block_channels(), spec.body.blocks)):
            decls.append(TensorDecl(f"body.{i}.weight", (c_out, c_in, 3, 3), ((c_out, 9 * c_in),)))
            decls.append(TensorDecl(f"body.{i}.bias", (c_out,)))
            if block.activation == "prelu":
                decls.append(TensorDecl(f"body.{i}.prelu", (c_out,)))
    else:
        for i in range(spec.body.layers):
            for suffix, shape_of in STL_TENSORS:
                decls.append(TensorDecl(f"body.{i}.{suffix}", shape_of(c, spec.body.hidden)))

    k = spec.tail.kernel
    out = 3 * spec.scale ** 2
    alt = ((out, spec.body_out_channels),) if k == 1 else ()
    decls.append(TensorDecl("tail.conv.weight", (out, spec.body_out_channels, k, k), alt))
    decls.append(TensorDecl("tail.conv.bias", (out,)))
    if spec.tail.final_conv:
        decls.append(TensorDecl("tail.final.weight", (3, 3, 3, 3)))
        decls.append(TensorDecl("tail.final.bias", (3,)))
    return decls

def resolve_tensors(decls: List[TensorDecl], store: WeightStore) -> Tuple[Dict[str, np.ndarray], List[str]]:
    """Look up every declaration by name and shape; unknown extras are reported, not fatal"""
    resolved = {}
    for decl in decls:
        if decl.name not in store:
            raise ModelBindingError(f"Missing tensor '{decl.name}' (expected shape {list(decl.shape)})")
        shape = tuple(store.entry(decl.name).shape)
        if not decl.accepts(shape):
            raise ModelBindingError(
                f"Tensor '{decl.name}' has shape {list(shape)}, expected {list(decl.shape)}"
            )
        resolved[decl.name] = store.get(decl.name)

    declared = {decl.name for decl in decls}
    unused = [name for name in store.names if name not in declared]
    if unused:
        logger.warning("Unused tensors in weight store", names=unused)
    return resolved, unused

def bind(spec: ModelSpec, store: WeightStore) -> BoundModel:
    """Resolve a spec against a weight store"""
    tensors, unused = resolve_tensors(declared_tensors(spec), store)

    try:
        head = ConvWeights3x3(tensors["head.weight"], tensors["head.bias"])
        blocks, layers = [], []
        if isinstance(spec.body, CnnBodySpec):
            for i, block in enumerate(spec.body.blocks):
                weight, bias = tensors[f"body.{i}.weight"], tensors[f"body.{i}.bias"]
                slope = tensors.get(f"body.{i}.prelu")
                if weight.ndim == 4:
                    blocks.append(MaskedConvBlock.from_3x3(ConvWeights3x3(weight, bias), block.activation, slope))
                else:
                    blocks.append(MaskedConvBlock(ConvWeights1x1(weight, bias), block.activation, slope))
        else:
            body = spec.body
            for i in range(body.layers):
                p = f"body.{i}."
                layers.append(StlWeights(
                    dim=spec.channels, heads=body.heads, win=body.win,
                    qkv_w=tensors[p + "qkv.weight"], qkv_b=tensors[p + "qkv.bias"],
                    proj_w=tensors[p + "proj.weight"], proj_b=tensors[p + "proj.bias"],
                    ln1_g=tensors[p + "ln1.weight"], ln1_b=tensors[p + "ln1.bias"],
                    ln2_g=tensors[p + "ln2.weight"], ln2_b=tensors[p + "ln2.bias"],
                    fc1_w=tensors[p + "fc1.weight"], fc1_b=tensors[p + "fc1.bias"],
                    fc2_w=tensors[p + "fc2.weight"], fc2_b=tensors[p + "fc2.bias"]
                ))

        weight, bias = tensors["tail.conv.weight"], tensors["tail.conv.bias"]
        if spec.tail.kernel == 3:
            tail_conv = ConvWeights3x3(weight, bias)
        else:
            tail_conv = ConvWeights1x1(weight.reshape(weight.shape[0], -1), bias)
        tail_final = None
        if spec.tail.final_conv:
            tail_final = ConvWeights3x3(tensors["tail.final.weight"], tensors["tail.final.bias"])
    except ShapeMismatchError as e:
        logger.error("Model binding failed", model=spec.name, error=str(e))
        raise ModelBindingError(f"Cannot bind {spec.name}: {e}") from e

    logger.info("Model bound", model=spec.name, tensors=len(tensors), unused=len(unused))
    return BoundModel(spec=spec, head=head, blocks=blocks, layers=layers,
                      tail_conv=tail_conv, tail_final=tail_final, unused=unused)

def _seed_tensor(rng: np.random.Generator, decl: TensorDecl) -> np.ndarray:
    name, shape = decl.name, decl.shape
    if name.endswith(".prelu"):
        return np.full(shape, 0.25, dtype=np.float32)
    if name.startswith("tail.conv.bias"):
        return np.full(shape, 0.5, dtype=np.float32)
    if ".ln" in name:
        center = 1.0 if name.endswith(".weight") else 0.0
        return (center + 0.02 * rng.standard_normal(shape)).astype(np.float32)
    if name.endswith(".bias"):
        return (0.02 * rng.standard_normal(shape)).astype(np.float32)
    fan_in = int(np.prod(shape[1:]))
    return (rng.standard_normal(shape) / np.sqrt(fan_in)).astype(np.float32)

def seed_weights(spec: ModelSpec, seed: int = 0) -> WeightStore:
    """Deterministic weights for every declared tensor, in declaration order"""
    rng = np.random.default_rng(seed)
    store = WeightStore.from_tensors((decl.name, _seed_tensor(rng, decl)) for decl in declared_tensors(spec))
    logger.info("Weights seeded", model=spec.name, seed=seed, tensors=len(store.names))
    return store
