"""
Excel styling definitions for calibration workbooks
"""

from openpyxl.styles import Font, PatternFill, Alignment, Border, Side

# Color palette
COLORS = {
    'header_bg': '366092',      # Dark blue
    'header_text': 'FFFFFF',    # White
    'ok': 'C6EFCE',             # Green
    'skipped': 'FFE66D',        # Yellow
    'failed': 'FF6B6B',         # Red
    'alt_row': 'F8F9FA'         # Light gray
}

HEADER_FONT = Font(
    name='Calibri',
    size=12,
    bold=True,
    color=COLORS['header_text']
)

DATA_FONT = Font(
    name='Calibri',
    size=11,
    color='000000'
)

HEADER_FILL = PatternFill(
    start_color=COLORS['header_bg'],
    end_color=COLORS['header_bg'],
    fill_type='solid'
)

ALT_ROW_FILL = PatternFill(
    start_color=COLORS['alt_row'],
    end_color=COLORS['alt_row'],
    fill_type='solid'
)

STATUS_FILLS = {
    'ok': PatternFill(start_color=COLORS['ok'], end_color=COLORS['ok'], fill_type='solid'),
    'insufficient_samples': PatternFill(start_color=COLORS['skipped'], end_color=COLORS['skipped'], fill_type='solid'),
    'insufficient_vehicles': PatternFill(start_color=COLORS['skipped'], end_color=COLORS['skipped'], fill_type='solid'),
    'non_converged': PatternFill(start_color=COLORS['failed'], end_color=COLORS['failed'], fill_type='solid'),
}

HEADER_ALIGNMENT = Alignment(
    horizontal='center',
    vertical='center',
    wrap_text=True
)

CENTER_ALIGNMENT = Alignment(
    horizontal='center',
    vertical='center'
)

THIN_BORDER = Border(
    left=Side(style='thin'),
    right=Side(style='thin'),
    top=Side(style='thin'),
    bottom=Side(style='thin')
)

NUMBER_FORMAT = '0.0000'

# Width per column name; unlisted columns use DEFAULT_WIDTH
COLUMN_WIDTHS = {
    'velocity': 10,
    'status': 22,
    'parameter': 16,
    'coefficients': 60,
}
DEFAULT_WIDTH = 14


def apply_table_styling(worksheet, columns, num_rows: int, status_column: str = None):
    """Style a header row plus `num_rows` data rows laid out as `columns`"""

    for col_idx, name in enumerate(columns, 1):
        cell = worksheet.cell(row=1, column=col_idx)
        cell.font = HEADER_FONT
        cell.fill = HEADER_FILL
        cell.alignment = HEADER_ALIGNMENT
        cell.border = THIN_BORDER
        worksheet.column_dimensions[cell.column_letter].width = COLUMN_WIDTHS.get(name, DEFAULT_WIDTH)

    for row_idx in range(2, num_rows + 2):
        for col_idx, name in enumerate(columns, 1):
            cell = worksheet.cell(row=row_idx, column=col_idx)
            cell.font = DATA_FONT
            cell.alignment = CENTER_ALIGNMENT
            cell.border = THIN_BORDER
            if isinstance(cell.value, float):
                cell.number_format = NUMBER_FORMAT
            if name == status_column and cell.value in STATUS_FILLS:
                cell.fill = STATUS_FILLS[cell.value]
            elif row_idx % 2 == 0:
                cell.fill = ALT_ROW_FILL

    # Freeze panes (freeze header row)
    worksheet.freeze_panes = "A2"
