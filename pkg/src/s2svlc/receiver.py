"""Receiver chain: binarize a capture, find and rectify the frame, read its cells."""
from __future__ import annotations

import enum

from .errors import AmbiguousOrientation, DimensionMismatch, MarkersNotFound, SingularHomography
from .frame_codec import CellGrid, FrameLayout, quantize_cells
from .pipeline import PipelineConfig, baseline_binarize, run_pipeline
from .raster import ImageRaster
from .roi import detect_markers, rectify

ROI_ERRORS = (MarkersNotFound, AmbiguousOrientation, SingularHomography, DimensionMismatch)


class Pipeline(enum.Enum):
    Proposed = "proposed"
    Baseline = "baseline"


def binarize(capture: ImageRaster, pipeline: Pipeline, cfg: PipelineConfig = PipelineConfig()) -> ImageRaster:
    if pipeline is Pipeline.Proposed:
        return run_pipeline(capture, cfg)
    return baseline_binarize(capture)


def read_frame(binary: ImageRaster, layout: FrameLayout) -> CellGrid:
    """Cells from a binarized capture; raises one of ``ROI_ERRORS`` when the frame is lost."""
    if not layout.has_markers:
        # bare layouts carry no locators; the raster must already be in render geometry
        return quantize_cells(binary, layout)
    corners = detect_markers(binary, layout)
    return quantize_cells(rectify(binary, corners, layout), layout)


def decode_capture(capture: ImageRaster, layout: FrameLayout, pipeline: Pipeline = Pipeline.Proposed,
                   cfg: PipelineConfig = PipelineConfig()) -> CellGrid:
    return read_frame(binarize(capture, pipeline, cfg), layout)
