"""
PDF report of a free-aspect inventory.
"""

import io
from datetime import datetime
from typing import Dict, List

import pandas as pd
from fpdf import FPDF
from fpdf.enums import XPos, YPos

FONT = 'Helvetica'


class PDFReportGenerator:
    """Generates the aspect inventory report."""

    def __init__(self):
        self.font_size_title = 16
        self.font_size_subtitle = 14
        self.font_size_text = 10
        self.font_size_small = 8

    def generate_report(self, data: pd.DataFrame, counts: pd.DataFrame, summary_stats: Dict,
                        insights: List[str], project: str) -> io.BytesIO:
        """Summary, counts per (mode, sign), insights and the per-aspect table."""
        pdf = FPDF()
        pdf.add_page()

        self._add_header(pdf, project)
        self._add_summary_section(pdf, summary_stats)
        self._add_counts_section(pdf, counts)
        self._add_insights_section(pdf, insights)
        self._add_detailed_table(pdf, data)
        self._add_footer(pdf)

        buffer = io.BytesIO()
        buffer.write(bytes(pdf.output()))
        buffer.seek(0)
        return buffer

    def _line(self, pdf: FPDF, height: float, text: str, align: str = 'L', border: int = 0):
        pdf.cell(0, height, text, border=border, new_x=XPos.LMARGIN, new_y=YPos.NEXT, align=align)

    def _add_header(self, pdf: FPDF, project: str):
        pdf.set_font(FONT, 'B', self.font_size_title)
        self._line(pdf, 10, 'Free Aspect Inventory', align='C')

        pdf.set_font(FONT, '', self.font_size_text)
        self._line(pdf, 5, f'Project: {project}', align='C')
        self._line(pdf, 5, f'Date: {datetime.now().strftime("%Y-%m-%d %H:%M:%S")}', align='C')
        pdf.ln(10)

    def _add_summary_section(self, pdf: FPDF, stats: Dict):
        pdf.set_font(FONT, 'B', self.font_size_subtitle)
        self._line(pdf, 8, 'Summary')

        pdf.set_font(FONT, '', self.font_size_text)
        col_width = 95
        pairs = [
            (f'Total aspects: {stats["total_aspects"]}', f'Free aspect area: {stats["total_free_area"]:.2f}'),
            (f'Largest aspect: {stats["largest_aspect"] or "-"}', f'Mean aspect area: {stats["mean_area"]:.2f}'),
            (f'Maps with several aspects: {stats["multi_aspect_maps"]}',
             f'Mirror consistent: {"yes" if stats["mirror_consistent"] else "no"}'),
        ]
        for left, right in pairs:
            pdf.cell(col_width, 6, left, border=0, new_x=XPos.RIGHT, new_y=YPos.TOP, align='L')
            pdf.cell(col_width, 6, right, border=0, new_x=XPos.LMARGIN, new_y=YPos.NEXT, align='L')
        pdf.ln(10)

    def _add_counts_section(self, pdf: FPDF, counts: pd.DataFrame):
        pdf.set_font(FONT, 'B', self.font_size_subtitle)
        self._line(pdf, 8, 'Aspects per working mode')

        pdf.set_font(FONT, 'B', self.font_size_small)
        widths = [40, 30, 30]
        for width, header in zip(widths, ['Working mode', 'det A > 0', 'det A < 0']):
            pdf.cell(width, 6, header, border=1, new_x=XPos.RIGHT, new_y=YPos.TOP, align='C')
        pdf.ln()
        pdf.set_font(FONT, '', self.font_size_small)
        for mode_index, row in counts.iterrows():
            pdf.cell(widths[0], 5, f'Mf{mode_index}', border=1, new_x=XPos.RIGHT, new_y=YPos.TOP, align='L')
            pdf.cell(widths[1], 5, str(int(row['+'])), border=1, new_x=XPos.RIGHT, new_y=YPos.TOP, align='R')
            pdf.cell(widths[2], 5, str(int(row['-'])), border=1, new_x=XPos.RIGHT, new_y=YPos.TOP, align='R')
            pdf.ln()
        pdf.ln(8)

    def _add_insights_section(self, pdf: FPDF, insights: List[str]):
        if not insights:
            return
        pdf.set_font(FONT, 'B', self.font_size_subtitle)
        self._line(pdf, 8, 'Insights')
        pdf.set_font(FONT, '', self.font_size_small)
        for insight in insights:
            pdf.multi_cell(0, 5, f'- {insight}', new_x=XPos.LMARGIN, new_y=YPos.NEXT)
        pdf.ln(5)

    def _add_detailed_table(self, pdf: FPDF, data: pd.DataFrame):
        if pdf.get_y() > 200:
            pdf.add_page()

        pdf.set_font(FONT, 'B', self.font_size_subtitle)
        self._line(pdf, 8, 'Aspects')

        col_widths = [25, 20, 20, 25, 30, 25, 30]
        headers = ['Aspect', 'Mode', 'Sign', 'Leaves', 'Area', 'Area %', 'Q Area']

        def write_headers():
            pdf.set_font(FONT, 'B', self.font_size_small)
            for width, header in zip(col_widths, headers):
                pdf.cell(width, 6, header, border=1, new_x=XPos.RIGHT, new_y=YPos.TOP, align='C')
            pdf.ln()
            pdf.set_font(FONT, '', self.font_size_small)

        write_headers()
        for _, row in data.iterrows():
            if pdf.get_y() > 270:
                pdf.add_page()
                write_headers()
            q_area = '-' if pd.isna(row['Q Area']) else f'{row["Q Area"]:.3f}'
            cells = [row['Aspect'], f'Mf{row["Mode"]}', row['Sign'], str(int(row['Leaves'])),
                     f'{row["Area"]:.3f}', f'{row["Area %"]:.1f}%', q_area]
            for k, (width, text) in enumerate(zip(col_widths, cells)):
                pdf.cell(width, 5, text, border=1, new_x=XPos.RIGHT, new_y=YPos.TOP, align='L' if k < 3 else 'R')
            pdf.ln()

    def _add_footer(self, pdf: FPDF):
        pdf.ln(10)
        pdf.set_font(FONT, 'I', self.font_size_small)
        self._line(pdf, 5, 'Generated by mvkit', align='C')
        self._line(pdf, 5, 'Within one aspect every continuous path is collision- and singularity-free', align='C')
