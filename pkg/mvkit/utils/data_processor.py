"""
Tabulation of free-aspect inventories.
"""

from typing import Dict, List, Mapping, Tuple

import numpy as np
import pandas as pd

from mvkit.decomposition.aspects import AspectMap
from mvkit.decomposition.labels import CellLabel
from mvkit.kinematics import WorkingMode

INVENTORY_COLUMNS = ['Aspect', 'Mode', 'Sign', 'Index', 'Leaves', 'Area', 'Area %', 'Q Area']
SMALL_ASPECT_SHARE = 1.0


def sign_symbol(det_sign: int) -> str:
    return '+' if det_sign > 0 else '-'


class AspectInventoryProcessor:
    """Builds and summarizes the table of free aspects across (mode, sign) maps."""

    def __init__(self, small_share: float = SMALL_ASPECT_SHARE):
        """
        Args:
            small_share: Aspects below this percentage of their map's free area
                are reported as small
        """
        self.small_share = small_share

    def process_maps(self, maps: Mapping[Tuple[WorkingMode, int], AspectMap]) -> pd.DataFrame:
        """One row per aspect, ordered by mode, sign (+ first) and serial index."""
        rows = []
        for (mode, det_sign), amap in maps.items():
            free_area = sum(a.area for a in amap.aspects)
            for aspect in amap.aspects:
                rows.append({
                    'Aspect': str(aspect.id),
                    'Mode': mode.index,
                    'Sign': sign_symbol(det_sign),
                    'Index': aspect.id.index,
                    'Leaves': len(aspect.cells),
                    'Area': aspect.area,
                    'Area %': aspect.area / free_area * 100 if free_area else 0.0,
                    'Q Area': aspect.q_projection.area if aspect.q_projection is not None else np.nan,
                })
        data = pd.DataFrame(rows, columns=INVENTORY_COLUMNS)
        if data.empty:
            return data
        data['Area'] = data['Area'].round(4)
        data['Area %'] = data['Area %'].round(1)
        data['Q Area'] = data['Q Area'].round(4)
        data['_sign_order'] = data['Sign'].map({'+': 0, '-': 1})
        data = data.sort_values(['Mode', '_sign_order', 'Index']).drop(columns='_sign_order')
        return data.reset_index(drop=True)

    def counts_table(self, data: pd.DataFrame) -> pd.DataFrame:
        """Aspect counts with modes 1-4 as rows and signs as columns (zeros filled)."""
        index = pd.Index([m.index for m in WorkingMode], name='Mode')
        if data.empty:
            return pd.DataFrame(0, index=index, columns=['+', '-'])
        table = data.pivot_table(index='Mode', columns='Sign', values='Aspect', aggfunc='count')
        return table.reindex(index=index, columns=['+', '-']).fillna(0).astype(int)

    def label_table(self, maps: Mapping[Tuple[WorkingMode, int], AspectMap]) -> pd.DataFrame:
        """Area per cell label for every map."""
        rows = []
        for (mode, det_sign), amap in maps.items():
            cell_area = amap.tree.min_cell ** 2
            counts = np.bincount(amap.labels.ravel(), minlength=len(CellLabel))
            row = {'Mode': mode.index, 'Sign': sign_symbol(det_sign)}
            for label in CellLabel:
                if label is not CellLabel.MIXED:
                    row[label.name] = round(float(counts[label]) * cell_area, 4)
            row['Conservative Leaves'] = len(amap.tree.conservative)
            rows.append(row)
        return pd.DataFrame(rows)

    def apply_filters(self, data: pd.DataFrame, filter_type: str) -> pd.DataFrame:
        """Filter by ``sign+``, ``sign-``, ``mode<N>`` or ``small``; anything else passes."""
        if filter_type == 'sign+':
            return data[data['Sign'] == '+']
        elif filter_type == 'sign-':
            return data[data['Sign'] == '-']
        elif filter_type.startswith('mode') and filter_type[4:].isdigit():
            return data[data['Mode'] == int(filter_type[4:])]
        elif filter_type == 'small':
            return data[data['Area %'] < self.small_share]
        else:
            return data

    def sort_results(self, data: pd.DataFrame, sort_by: str, order: str = 'desc') -> pd.DataFrame:
        ascending = order == 'asc'
        return data.sort_values(by=sort_by, ascending=ascending)

    def calculate_summary_stats(self, data: pd.DataFrame) -> Dict:
        counts = self.counts_table(data)
        return {
            'total_aspects': len(data),
            'total_free_area': float(data['Area'].sum()) if not data.empty else 0.0,
            'largest_aspect': data.loc[data['Area'].idxmax(), 'Aspect'] if not data.empty else None,
            'mean_area': float(data['Area'].mean()) if not data.empty else 0.0,
            'counts_plus': counts['+'].tolist(),
            'counts_minus': counts['-'].tolist(),
            'mirror_consistent': sorted(counts['+'].tolist()) == sorted(counts['-'].tolist()),
            'multi_aspect_maps': int((counts.values > 1).sum()),
        }

    def get_alerts(self, data: pd.DataFrame) -> List[Dict]:
        """Flag small aspects and sign counts that break mirror symmetry."""
        alerts = []

        for _, item in self.apply_filters(data, 'small').iterrows():
            alerts.append({
                'type': 'small_aspect',
                'severity': 'warning',
                'message': f"{item['Aspect']} covers only {item['Area %']:.1f}% of its map's free area; "
                           f"it may be a discretization artifact",
                'aspect': item['Aspect'],
                'value': item['Area'],
            })

        stats = self.calculate_summary_stats(data)
        if not stats['mirror_consistent']:
            alerts.append({
                'type': 'mirror_mismatch',
                'severity': 'critical',
                'message': f"Aspect counts for sign + {stats['counts_plus']} and sign - {stats['counts_minus']} "
                           f"are not mirror images; refine min_cell",
                'aspect': None,
                'value': None,
            })
        return alerts

    def get_insights(self, data: pd.DataFrame) -> List[str]:
        insights = []
        if data.empty:
            return ["No free aspects: the mechanism cannot move without collision or singularity"]

        total_area = data['Area'].sum()
        for _, item in data.nlargest(3, 'Area').iterrows():
            percentage = item['Area'] / total_area * 100
            insights.append(f"{item['Aspect']} accounts for {percentage:.1f}% of the free aspect area ({item['Area']:.2f})")

        counts = self.counts_table(data)
        for mode_index, row in counts.iterrows():
            if row.max() > 1:
                insights.append(f"Working mode {mode_index} splits into {row.max()} aspects: "
                                f"some pose pairs need a mode change to connect")

        empty = [f"Mf{m}{s}" for m, row in counts.iterrows() for s, n in row.items() if n == 0]
        if empty:
            insights.append(f"No free aspect for {', '.join(empty)}")
        return insights
