"""수용 기준 통합 테스트"""
