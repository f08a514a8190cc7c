"""
Excel workbook of a free-aspect inventory.
"""

import io
from datetime import datetime
from typing import Dict, List

import pandas as pd


class ExcelReportGenerator:
    """Generates the aspect inventory workbook (Summary, Aspects, Analysis, Charts)."""

    def generate_report(self, data: pd.DataFrame, counts: pd.DataFrame, labels: pd.DataFrame,
                        summary_stats: Dict, insights: List[str], project: str) -> io.BytesIO:
        buffer = io.BytesIO()

        with pd.ExcelWriter(buffer, engine='xlsxwriter') as writer:
            formats = self._create_formats(writer.book)
            self._create_summary_sheet(writer, summary_stats, insights, project, formats)
            self._create_data_sheet(writer, data, formats)
            self._create_analysis_sheet(writer, counts, labels, formats)
            self._create_charts_sheet(writer, counts, labels)

        buffer.seek(0)
        return buffer

    def _create_formats(self, workbook):
        return {
            'title': workbook.add_format({
                'bold': True,
                'font_size': 16,
                'align': 'center',
                'valign': 'vcenter'
            }),
            'subtitle': workbook.add_format({
                'bold': True,
                'font_size': 12,
                'align': 'left',
                'bg_color': '#E6E6FA'
            }),
            'header': workbook.add_format({
                'bold': True,
                'font_size': 10,
                'align': 'center',
                'valign': 'vcenter',
                'bg_color': '#4F81BD',
                'font_color': 'white',
                'border': 1
            }),
            'area': workbook.add_format({
                'num_format': '#,##0.000',
                'align': 'right'
            }),
            'percentage': workbook.add_format({
                'num_format': '0.0%',
                'align': 'right'
            }),
            'small_aspect': workbook.add_format({
                'bg_color': '#FFE4B5',
                'num_format': '0.0%'
            }),
            'date': workbook.add_format({
                'num_format': 'yyyy-mm-dd hh:mm',
                'align': 'center'
            })
        }

    def _create_summary_sheet(self, writer, stats: Dict, insights: List[str], project: str, formats):
        worksheet = writer.book.add_worksheet('Summary')

        worksheet.merge_range('A1:D1', 'Free Aspect Inventory', formats['title'])
        worksheet.write('A3', 'Project:', formats['subtitle'])
        worksheet.write('B3', project)
        worksheet.write('A4', 'Date:', formats['subtitle'])
        worksheet.write('B4', datetime.now(), formats['date'])

        worksheet.write('A6', 'Summary', formats['subtitle'])
        summary_data = [
            ['Total aspects', stats['total_aspects']],
            ['Free aspect area', stats['total_free_area']],
            ['Mean aspect area', stats['mean_area']],
            ['Largest aspect', stats['largest_aspect'] or '-'],
            ['Maps with several aspects', stats['multi_aspect_maps']],
            ['Mirror consistent', 'yes' if stats['mirror_consistent'] else 'no'],
        ]
        for i, (label, value) in enumerate(summary_data, start=7):
            worksheet.write(f'A{i}', label)
            if 'area' in label:
                worksheet.write(f'B{i}', value, formats['area'])
            else:
                worksheet.write(f'B{i}', value)

        if insights:
            worksheet.write('A15', 'Insights', formats['subtitle'])
            for i, insight in enumerate(insights, start=16):
                worksheet.write(f'A{i}', f'• {insight}')

        worksheet.set_column('A:A', 28)
        worksheet.set_column('B:B', 20)

    def _create_data_sheet(self, writer, data: pd.DataFrame, formats):
        worksheet = writer.book.add_worksheet('Aspects')

        headers = ['Aspect', 'Mode', 'Sign', 'Index', 'Leaves', 'Area', 'Area %', 'Q Area']
        for col, header in enumerate(headers):
            worksheet.write(0, col, header, formats['header'])

        for row, (_, item) in enumerate(data.iterrows(), start=1):
            worksheet.write(row, 0, item['Aspect'])
            worksheet.write(row, 1, int(item['Mode']))
            worksheet.write(row, 2, item['Sign'])
            worksheet.write(row, 3, int(item['Index']))
            worksheet.write(row, 4, int(item['Leaves']))
            worksheet.write(row, 5, item['Area'], formats['area'])
            share_format = formats['small_aspect'] if item['Area %'] < 1.0 else formats['percentage']
            worksheet.write(row, 6, item['Area %'] / 100, share_format)
            if pd.isna(item['Q Area']):
                worksheet.write_blank(row, 7, None)
            else:
                worksheet.write(row, 7, item['Q Area'], formats['area'])

        worksheet.set_column('A:A', 12)
        worksheet.set_column('B:H', 12)
        worksheet.freeze_panes(1, 0)

    def _create_analysis_sheet(self, writer, counts: pd.DataFrame, labels: pd.DataFrame, formats):
        worksheet = writer.book.add_worksheet('Analysis')

        worksheet.write('A1', 'Aspects per working mode', formats['subtitle'])
        for col, header in enumerate(['Mode', 'det A > 0', 'det A < 0']):
            worksheet.write(2, col, header, formats['header'])
        for i, (mode_index, row) in enumerate(counts.iterrows(), start=3):
            worksheet.write(i, 0, f'Mf{mode_index}')
            worksheet.write(i, 1, int(row['+']))
            worksheet.write(i, 2, int(row['-']))

        worksheet.write('A10', 'Area per cell label', formats['subtitle'])
        if not labels.empty:
            for col, header in enumerate(labels.columns):
                worksheet.write(11, col, header, formats['header'])
            for i, (_, row) in enumerate(labels.iterrows(), start=12):
                for col, header in enumerate(labels.columns):
                    value = row[header]
                    if isinstance(value, float):
                        worksheet.write(i, col, value, formats['area'])
                    else:
                        worksheet.write(i, col, value if isinstance(value, str) else int(value))

        worksheet.set_column('A:J', 16)

    def _create_charts_sheet(self, writer, counts: pd.DataFrame, labels: pd.DataFrame):
        worksheet = writer.book.add_worksheet('Charts')
        workbook = writer.book

        chart = workbook.add_chart({'type': 'column'})
        last = 3 + len(counts) - 1
        chart.add_series({
            'name': 'det A > 0',
            'categories': f'=Analysis!$A$4:$A${last + 1}',
            'values': f'=Analysis!$B$4:$B${last + 1}',
        })
        chart.add_series({
            'name': 'det A < 0',
            'categories': f'=Analysis!$A$4:$A${last + 1}',
            'values': f'=Analysis!$C$4:$C${last + 1}',
        })
        chart.set_title({'name': 'Free aspects per working mode'})
        chart.set_x_axis({'name': 'Working mode'})
        chart.set_y_axis({'name': 'Aspects'})
        chart.set_size({'width': 480, 'height': 288})
        worksheet.insert_chart('A2', chart)

        if not labels.empty and 'FREE' in labels.columns:
            free_col = chr(ord('A') + list(labels.columns).index('FREE'))
            first, final = 13, 12 + len(labels)
            chart2 = workbook.add_chart({'type': 'bar'})
            chart2.add_series({
                'name': 'FREE area',
                'categories': f'=Analysis!$A${first}:$B${final}',
                'values': f'=Analysis!${free_col}${first}:${free_col}${final}',
            })
            chart2.set_title({'name': 'Free area per map'})
            chart2.set_size({'width': 480, 'height': 288})
            worksheet.insert_chart('A20', chart2)
