"""하네스 테스트 모듈"""
