"""Rendered outputs: SVG maps and aspect inventory reports."""

from mvkit.reports.excel_generator import ExcelReportGenerator
from mvkit.reports.pdf_generator import PDFReportGenerator
from mvkit.reports.svg_generator import MapSVGGenerator, RenderStyle

__all__ = ["ExcelReportGenerator", "MapSVGGenerator", "PDFReportGenerator", "RenderStyle"]
